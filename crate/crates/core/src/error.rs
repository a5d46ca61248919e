use thiserror::Error;

pub type Result<T> = std::result::Result<T, LevyError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("Lévy density is not finite at y = {y}")]
    MeasureEvaluation { y: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    Tolerance { estimate: f64, error: f64 },

    #[error("moment of order {k} diverges on the requested region")]
    DivergentMoment { k: u32 },

    #[error("tail mass {mass} beyond cutoff {cutoff} is too small to sample from")]
    DegenerateTail { cutoff: f64, mass: f64 },

    #[error("intensity {lambda} exceeds the supremum {supremum} of the intensity map")]
    InfeasibleIntensity { lambda: f64, supremum: f64 },

    #[error("no bracket found for intensity {lambda}")]
    Bracketing { lambda: f64 },

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("unsupported approximation order {0}")]
    UnsupportedOrder(u32),

    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    #[error("unsupported scheme `{0}`")]
    UnsupportedScheme(String),

    #[error("ODE flow diverged at flow time {time}")]
    FlowDivergence { time: f64 },

    #[error("continuous leg starting at t = {time} failed: {source}")]
    Leg {
        time: f64,
        #[source]
        source: Box<LevyError>,
    },

    #[error("non-finite payoff on path {path}")]
    TaintedEstimate { path: u64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

impl LevyError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        LevyError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
