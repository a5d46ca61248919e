use std::path::PathBuf;

use levysim::LevyError;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, FieldError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("invalid arguments: {}", join(.0))]
    Arguments(Vec<FieldError>),

    #[error("{0}")]
    Levy(#[from] LevyError),

    #[error("no reference value for this payoff; set run.reference")]
    MissingReference,

    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

fn join(errs: &[FieldError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub module: &'static str,
    pub message: String,
    pub fields: Vec<String>,
}

impl CliError {
    pub fn record(&self) -> ErrorRecord {
        let (kind, module, fields) = match self {
            CliError::Config(ConfigError::Io { .. }) => ("io", "cli", Vec::new()),
            CliError::Config(ConfigError::Syntax(_)) => ("config_syntax", "cli", Vec::new()),
            CliError::Config(ConfigError::Invalid(errs)) | CliError::Arguments(errs) => {
                ("validation", "cli", errs.iter().map(|e| e.field.clone()).collect())
            }
            CliError::Levy(e) => {
                let (kind, module) = levy_provenance(e);
                let fields = match e {
                    LevyError::InvalidParameter { field, .. } => vec![field.to_string()],
                    _ => Vec::new(),
                };
                (kind, module, fields)
            }
            CliError::MissingReference => ("missing_reference", "cli", vec!["run.reference".into()]),
            CliError::Output { .. } => ("io", "cli", Vec::new()),
        };
        ErrorRecord {
            kind,
            module,
            message: self.to_string(),
            fields,
        }
    }
}

fn levy_provenance(e: &LevyError) -> (&'static str, &'static str) {
    match e {
        LevyError::MeasureEvaluation { .. } => ("measure_evaluation", "levy_measure"),
        LevyError::Tolerance { .. } => ("tolerance", "levy_measure"),
        LevyError::DivergentMoment { .. } => ("divergent_moment", "levy_measure"),
        LevyError::DegenerateTail { .. } => ("degenerate_tail", "levy_measure"),
        LevyError::InfeasibleIntensity { .. } => ("infeasible_intensity", "approx_optimizer"),
        LevyError::Bracketing { .. } => ("bracketing", "approx_optimizer"),
        LevyError::InternalConsistency(_) => ("internal_consistency", "approx_optimizer"),
        LevyError::UnsupportedOrder(_) => ("unsupported_order", "approx_optimizer"),
        LevyError::InvalidMoments(_) => ("invalid_moments", "approx_optimizer"),
        LevyError::UnsupportedScheme(_) => ("unsupported_scheme", "continuous_schemes"),
        LevyError::FlowDivergence { .. } => ("flow_divergence", "continuous_schemes"),
        LevyError::Leg { .. } => ("leg_failure", "jump_adapted"),
        LevyError::TaintedEstimate { .. } => ("tainted_estimate", "mc_engine"),
        LevyError::InvalidParameter { .. } => ("invalid_parameter", "levysim"),
    }
}
