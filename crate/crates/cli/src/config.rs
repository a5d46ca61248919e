//! Experiment configuration: INI-style sections in TOML syntax.

use std::fmt;
use std::path::{Path, PathBuf};

use levysim::approx::ApproxOrder;
use levysim::jump_adapted::LevyModel;
use levysim::levy_measure::{CgmyParams, LevyMeasure, TabulatedDensity};
use levysim::schemes::{SchemeKind, SdeCoefficients};
use levysim::LevyError;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    measure: RawMeasure,
    model: RawModel,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    output: Output,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    kind: String,
    c: Option<f64>,
    lambda_plus: Option<f64>,
    lambda_minus: Option<f64>,
    alpha: Option<f64>,
    ys: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    quad_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    gamma0: f64,
    sigma0: f64,
    #[serde(default = "default_h")]
    h: String,
    #[serde(default = "default_x0")]
    x0: f64,
    #[serde(default = "default_true")]
    martingale: bool,
    mu_z: Option<f64>,
}

fn default_h() -> String {
    "linear".into()
}

fn default_x0() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    orders: Option<Vec<u32>>,
    schemes: Option<Vec<String>>,
    lambda_grid: Option<Vec<f64>>,
    rates_grid: Option<String>,
    paths: Option<u64>,
    seed: Option<u64>,
    substeps: Option<u32>,
    payoff: Option<String>,
    payoff_coefficients: Option<Vec<f64>>,
    reference: Option<f64>,
    match_third_moment: Option<bool>,
}

/// Output files; relative paths resolve against the working directory.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub approx: Option<PathBuf>,
    pub rates: Option<PathBuf>,
    pub simulate: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Cgmy(CgmyParams),
    Table { ys: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// `h(x) = x`, `b = γ₀x`, `σ = σ₀x`
    Linear,
    /// `h ≡ 1`, `b ≡ γ₀`, `σ ≡ σ₀`
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    Identity,
    Square,
    /// `Σ c_k x^k`
    Polynomial(Vec<f64>),
}

impl Payoff {
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            Payoff::Identity => vec![0.0, 1.0],
            Payoff::Square => vec![0.0, 0.0, 1.0],
            Payoff::Polynomial(c) => c.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Payoff::Identity => x,
            Payoff::Square => x * x,
            Payoff::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub gamma0: f64,
    pub sigma0: f64,
    pub h: JumpKind,
    pub x0: f64,
    pub martingale: bool,
    pub mu_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub orders: Vec<ApproxOrder>,
    pub schemes: Vec<SchemeKind>,
    pub lambda_grid: Vec<f64>,
    pub rates_grid: Vec<f64>,
    pub paths: u64,
    pub seed: u64,
    pub substeps: u32,
    pub payoff: Payoff,
    pub reference: Option<f64>,
    pub match_third_moment: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub measure: MeasureSpec,
    pub quad_tol: Option<f64>,
    pub model: ModelSpec,
    pub run: RunSpec,
    pub output: Output,
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Syntax(String),
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            ConfigError::Syntax(m) => write!(f, "config syntax: {m}"),
            ConfigError::Invalid(errs) => {
                let parts: Vec<String> = errs.iter().map(ToString::to_string).collect();
                write!(f, "invalid config: {}", parts.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Log-spaced grid from `a:b:points` (endpoints included).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected a:b:points, got {spec:?}"));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad start {:?}", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| format!("bad end {:?}", parts[1]))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad point count {:?}", parts[2]))?;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(format!("need 0 < a < b, got a={a}, b={b}"));
    }
    if n < 2 {
        return Err("need at least 2 points".into());
    }
    let ratio = b / a;
    Ok((0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => a * ratio.powf(i as f64 / (n - 1) as f64),
        })
        .collect())
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn fail(&mut self, field: &str, reason: impl Into<String>) {
        self.0.push(FieldError {
            field: field.into(),
            reason: reason.into(),
        });
    }

    fn require(&mut self, field: &str, value: Option<f64>) -> f64 {
        match value {
            Some(v) if v.is_finite() => v,
            Some(v) => {
                self.fail(field, format!("must be finite, got {v}"));
                f64::NAN
            }
            None => {
                self.fail(field, "missing");
                f64::NAN
            }
        }
    }

    fn positive(&mut self, field: &str, value: Option<f64>) -> f64 {
        let v = self.require(field, value);
        if v.is_finite() && v <= 0.0 {
            self.fail(field, format!("must be > 0, got {v}"));
        }
        v
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut ck = Checker(Vec::new());

        let m = raw.measure;
        let measure = match m.kind.trim().to_ascii_lowercase().as_str() {
            "cgmy" => {
                let c = ck.positive("measure.c", m.c);
                let lambda_plus = ck.positive("measure.lambda_plus", m.lambda_plus);
                let lambda_minus = ck.positive("measure.lambda_minus", m.lambda_minus);
                let alpha = ck.require("measure.alpha", m.alpha);
                if alpha.is_finite() && !(alpha > 0.0 && alpha < 2.0) {
                    ck.fail("measure.alpha", format!("must lie in (0, 2), got {alpha}"));
                }
                MeasureSpec::Cgmy(CgmyParams {
                    c,
                    lambda_plus,
                    lambda_minus,
                    alpha,
                })
            }
            "table" => {
                let ys = m.ys.unwrap_or_default();
                let values = m.values.unwrap_or_default();
                match TabulatedDensity::new(ys.clone(), values.clone()) {
                    Err(LevyError::InvalidParameter { field: "y", reason }) => ck.fail("measure.ys", reason),
                    Err(e) => ck.fail("measure.values", e.to_string()),
                    Ok(_) => {}
                }
                MeasureSpec::Table { ys, values }
            }
            other => {
                ck.fail("measure.kind", format!("expected \"cgmy\" or \"table\", got {other:?}"));
                MeasureSpec::Table {
                    ys: Vec::new(),
                    values: Vec::new(),
                }
            }
        };
        if let Some(t) = m.quad_tol {
            if !(t > 0.0 && t < 1e-3) {
                ck.fail("measure.quad_tol", format!("must lie in (0, 1e-3), got {t}"));
            }
        }

        let md = raw.model;
        for (field, v) in [("model.gamma0", md.gamma0), ("model.x0", md.x0)] {
            if !v.is_finite() {
                ck.fail(field, format!("must be finite, got {v}"));
            }
        }
        if !(md.sigma0 >= 0.0 && md.sigma0.is_finite()) {
            ck.fail("model.sigma0", format!("must be finite and >= 0, got {}", md.sigma0));
        }
        let h = match md.h.trim().to_ascii_lowercase().as_str() {
            "linear" => JumpKind::Linear,
            "constant" => JumpKind::Constant,
            other => {
                ck.fail("model.h", format!("expected \"linear\" or \"constant\", got {other:?}"));
                JumpKind::Linear
            }
        };
        if md.martingale && md.mu_z.is_some() {
            ck.fail("model.mu_z", "only allowed with martingale = false");
        }
        let mu_z = md.mu_z.unwrap_or(0.0);
        if !mu_z.is_finite() {
            ck.fail("model.mu_z", "must be finite");
        }

        let r = raw.run;
        let orders: Vec<ApproxOrder> = r
            .orders
            .unwrap_or_else(|| vec![2, 3, 4])
            .into_iter()
            .filter_map(|n| match ApproxOrder::try_from(n) {
                Ok(o) => Some(o),
                Err(_) => {
                    ck.fail("run.orders", format!("unsupported order {n}, expected 2, 3 or 4"));
                    None
                }
            })
            .collect();
        let schemes: Vec<SchemeKind> = r
            .schemes
            .unwrap_or_else(|| vec!["wt1".into(), "wt2".into(), "nv".into()])
            .iter()
            .filter_map(|s| match s.parse::<SchemeKind>() {
                Ok(k) => Some(k),
                Err(e) => {
                    ck.fail("run.schemes", e.to_string());
                    None
                }
            })
            .collect();
        if orders.is_empty() {
            ck.fail("run.orders", "must not be empty");
        }
        if schemes.is_empty() {
            ck.fail("run.schemes", "must not be empty");
        }
        let lambda_grid = r
            .lambda_grid
            .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            ck.fail("run.lambda_grid", "entries must be finite and > 0");
        }
        let rates_grid = match parse_grid(r.rates_grid.as_deref().unwrap_or("16:4096:9")) {
            Ok(g) => g,
            Err(e) => {
                ck.fail("run.rates_grid", e);
                Vec::new()
            }
        };
        let paths = r.paths.unwrap_or(100_000);
        if paths < 2 {
            ck.fail("run.paths", format!("must be >= 2, got {paths}"));
        }
        let substeps = r.substeps.unwrap_or(1);
        if substeps == 0 {
            ck.fail("run.substeps", "must be >= 1");
        }
        let payoff = match (r.payoff.as_deref().unwrap_or("identity"), r.payoff_coefficients) {
            ("identity", None) => Payoff::Identity,
            ("square", None) => Payoff::Square,
            ("polynomial", Some(c)) if !c.is_empty() && c.iter().all(|v| v.is_finite()) => Payoff::Polynomial(c),
            ("polynomial", _) => {
                ck.fail("run.payoff_coefficients", "polynomial payoff needs finite coefficients");
                Payoff::Identity
            }
            ("identity" | "square", Some(_)) => {
                ck.fail("run.payoff_coefficients", "only used with payoff = \"polynomial\"");
                Payoff::Identity
            }
            (other, _) => {
                ck.fail(
                    "run.payoff",
                    format!("expected identity, square or polynomial, got {other:?}"),
                );
                Payoff::Identity
            }
        };
        if let Some(v) = r.reference {
            if !v.is_finite() {
                ck.fail("run.reference", "must be finite");
            }
        }

        if !ck.0.is_empty() {
            return Err(ConfigError::Invalid(ck.0));
        }
        Ok(ExperimentConfig {
            measure,
            quad_tol: m.quad_tol,
            model: ModelSpec {
                gamma0: md.gamma0,
                sigma0: md.sigma0,
                h,
                x0: md.x0,
                martingale: md.martingale,
                mu_z,
            },
            run: RunSpec {
                orders,
                schemes,
                lambda_grid,
                rates_grid,
                paths,
                seed: r.seed.unwrap_or(0),
                substeps,
                payoff,
                reference: r.reference,
                match_third_moment: r.match_third_moment.unwrap_or(false),
            },
            output: raw.output,
        })
    }

    pub fn levy_measure(&self) -> levysim::Result<LevyMeasure> {
        let m = match &self.measure {
            MeasureSpec::Cgmy(p) => LevyMeasure::cgmy(*p)?,
            MeasureSpec::Table { ys, values } => LevyMeasure::new(TabulatedDensity::new(ys.clone(), values.clone())?),
        };
        Ok(match self.quad_tol {
            Some(t) => m.with_quad_tol(t),
            None => m,
        })
    }

    pub fn coefficients(&self) -> SdeCoefficients {
        let ModelSpec { gamma0, sigma0, .. } = self.model;
        match self.model.h {
            JumpKind::Linear => SdeCoefficients::stochastic_exponential(gamma0, sigma0),
            JumpKind::Constant => SdeCoefficients::additive(gamma0, sigma0),
        }
    }

    pub fn model(&self) -> levysim::Result<LevyModel> {
        let measure = self.levy_measure()?;
        let coeffs = self.coefficients();
        if self.model.martingale {
            LevyModel::martingale(coeffs, measure, self.model.x0)
        } else {
            Ok(LevyModel::new(coeffs, measure, self.model.mu_z, self.model.x0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[measure]
kind = "cgmy"
c = 0.5
lambda_plus = 3.5
lambda_minus = 2.0
alpha = 0.5

[model]
gamma0 = 0.5
sigma0 = 0.3
"#;

    #[test]
    fn defaults_fill_the_run_block() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.run.orders, ApproxOrder::ALL.to_vec());
        assert_eq!(cfg.run.schemes, SchemeKind::ALL.to_vec());
        assert_eq!(cfg.run.lambda_grid, vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        assert_eq!(cfg.run.rates_grid.len(), 9);
        assert_eq!(cfg.run.payoff, Payoff::Identity);
        assert!(cfg.model.martingale);
        assert_eq!(cfg.model.h, JumpKind::Linear);
    }

    #[test]
    fn every_bad_field_is_reported() {
        let text = BASE
            .replace("alpha = 0.5", "alpha = 2.5")
            .replace("c = 0.5", "c = -1.0")
            .replace("sigma0 = 0.3", "sigma0 = -0.3")
            + "[run]\npaths = 1\norders = [5]\nschemes = [\"klv3\"]\n";
        let Err(ConfigError::Invalid(errs)) = ExperimentConfig::parse(&text) else {
            panic!("expected validation errors");
        };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        for f in [
            "measure.alpha",
            "measure.c",
            "model.sigma0",
            "run.paths",
            "run.orders",
            "run.schemes",
        ] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.to_string() + "[run]\npath = 10\n";
        assert!(matches!(ExperimentConfig::parse(&text), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn log_grid() {
        let g = parse_grid("16:4096:9").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 16.0);
        assert_eq!(g[8], 4096.0);
        assert!((g[1] - 32.0).abs() < 1e-12);
        assert!(parse_grid("4:2:3").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:100:1").is_err());
    }

    #[test]
    fn polynomial_payoff() {
        let text = BASE.to_string() + "[run]\npayoff = \"polynomial\"\npayoff_coefficients = [1.0, 0.0, 2.0]\n";
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.run.payoff.eval(3.0), 19.0);
        let bad = BASE.to_string() + "[run]\npayoff = \"polynomial\"\n";
        assert!(ExperimentConfig::parse(&bad).is_err());
    }
}
