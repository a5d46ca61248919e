//! One-step weak schemes for the continuous part between jumps.

mod coefficients;
mod flow;
mod noise;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use coefficients::{Coefficient, SdeCoefficients};
pub use flow::{ode_flow, Field};
pub use noise::NoiseLaw;

use crate::approx::FiniteApprox;
use crate::error::{LevyError, Result};
use crate::jump_adapted::LevyModel;
use crate::levy_measure::{MomentMode, Region};

/// Drift of the continuous part once the small jumps are replaced by `ν̄`.
#[derive(Debug, Clone)]
pub struct EffectiveDrift {
    pub gamma_bar: f64,
    /// `b(x) + γ̄ h(x)`
    pub b_bar: Coefficient,
}

impl EffectiveDrift {
    pub fn new(coeffs: &SdeCoefficients, gamma_bar: f64) -> Self {
        Self {
            gamma_bar,
            b_bar: coeffs.drift.plus_scaled(&coeffs.jump, gamma_bar),
        }
    }
}

/// `γ̄ = μ_Z + ∫_{|y|>1} y ν(dy) − ∫ y ν̄(dy)`, so that `E[Z̄₁] = E[Z₁]`.
pub fn effective_drift(model: &LevyModel, approx: &FiniteApprox) -> Result<EffectiveDrift> {
    let big = model
        .measure
        .partial_moment(1, Region::Outside(1.0), MomentMode::Signed)?;
    let compensated = approx.moment(1, MomentMode::Signed)?;
    let gamma_bar = model.mu_z + big - compensated;
    Ok(EffectiveDrift::new(&model.coeffs, gamma_bar))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Euler–Maruyama
    Wt1,
    /// Simplified order-2 weak Taylor scheme with three-point increments
    Wt2,
    /// Ninomiya–Victoir splitting
    Nv,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Wt1, SchemeKind::Wt2, SchemeKind::Nv];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Wt1 => "wt1",
            SchemeKind::Wt2 => "wt2",
            SchemeKind::Nv => "nv",
        }
    }

    pub fn noise_law(self) -> NoiseLaw {
        match self {
            SchemeKind::Wt2 => NoiseLaw::ThreePoint,
            SchemeKind::Wt1 | SchemeKind::Nv => NoiseLaw::Gaussian,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = LevyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wt1" => Ok(SchemeKind::Wt1),
            "wt2" => Ok(SchemeKind::Wt2),
            "nv" => Ok(SchemeKind::Nv),
            _ => Err(LevyError::UnsupportedScheme(s.to_string())),
        }
    }
}

impl Serialize for SchemeKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SchemeKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A scheme bound to a coefficient set; a pure map of `(x, Δ, η)`.
#[derive(Debug, Clone)]
pub struct ContinuousStepper {
    kind: SchemeKind,
    b_bar: Coefficient,
    sigma: Coefficient,
    v0: Field,
    v1: Field,
}

fn coefficient_field(c: &Coefficient) -> Field {
    match c.affine() {
        Some((a0, a1)) => Field::affine(a0, a1),
        None => {
            let c = c.clone();
            Field::new(move |x| c.value(x))
        }
    }
}

impl ContinuousStepper {
    pub fn new(kind: SchemeKind, coeffs: &SdeCoefficients, drift: &EffectiveDrift) -> Self {
        let b_bar = drift.b_bar.clone();
        let sigma = coeffs.diffusion.clone();
        // Stratonovich-corrected drift V₀ = b̄ − ½σσ′
        let v0 = match (b_bar.affine(), sigma.affine()) {
            (Some((b0, b1)), Some((s0, s1))) => Field::affine(b0 - 0.5 * s0 * s1, b1 - 0.5 * s1 * s1),
            _ => {
                let (b, s) = (b_bar.clone(), sigma.clone());
                Field::new(move |x| b.value(x) - 0.5 * s.value(x) * s.d1(x))
            }
        };
        let v1 = coefficient_field(&sigma);
        Self {
            kind,
            b_bar,
            sigma,
            v0,
            v1,
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn noise_law(&self) -> NoiseLaw {
        self.kind.noise_law()
    }

    /// One step of length `dt` driven by the normalized increment `eta`.
    pub fn step_with_noise(&self, x: f64, dt: f64, eta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&dt) {
            return Err(LevyError::invalid("dt", format!("step {dt} outside [0, 1]")));
        }
        let sq = dt.sqrt();
        match self.kind {
            SchemeKind::Wt1 => Ok(x + self.b_bar.value(x) * dt + self.sigma.value(x) * sq * eta),
            SchemeKind::Wt2 => {
                let w = sq * eta;
                let (b, b1, b2) = (self.b_bar.value(x), self.b_bar.d1(x), self.b_bar.d2(x));
                let (s, s1, s2) = (self.sigma.value(x), self.sigma.d1(x), self.sigma.d2(x));
                Ok(x + b * dt
                    + s * w
                    + 0.5 * s * s1 * (w * w - dt)
                    + 0.5 * b1 * s * w * dt
                    + 0.5 * (b * b1 + 0.5 * b2 * s * s) * dt * dt
                    + 0.5 * (b * s1 + 0.5 * s2 * s * s) * w * dt)
            }
            SchemeKind::Nv => {
                let h_max = dt / 4.0;
                let y = ode_flow(&self.v0, x, 0.5 * dt, h_max)?;
                let y = ode_flow(&self.v1, y, sq * eta, h_max)?;
                ode_flow(&self.v0, y, 0.5 * dt, h_max)
            }
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, x: f64, dt: f64, rng: &mut R) -> Result<f64> {
        let eta = self.noise_law().sample(rng);
        self.step_with_noise(x, dt, eta)
    }

    /// `substeps` equal steps covering `duration`.
    pub fn evolve<R: Rng + ?Sized>(&self, x: f64, duration: f64, substeps: u32, rng: &mut R) -> Result<f64> {
        if substeps == 0 {
            return Err(LevyError::invalid("substeps", "must be >= 1"));
        }
        let dt = duration / substeps as f64;
        let mut y = x;
        for _ in 0..substeps {
            y = self.step(y, dt, rng)?;
        }
        Ok(y)
    }

    /// `E[f(step(x, dt, η))]` by exact enumeration (three-point) or a
    /// 40-node Gauss–Hermite rule (Gaussian).
    pub fn expected_step(&self, x: f64, dt: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (eta, w) in self.noise_law().quadrature() {
            acc += w * f(self.step_with_noise(x, dt, eta)?);
        }
        Ok(acc)
    }
}

pub fn wt1_step<R: Rng + ?Sized>(
    coeffs: &SdeCoefficients,
    drift: &EffectiveDrift,
    x: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    ContinuousStepper::new(SchemeKind::Wt1, coeffs, drift).step(x, dt, rng)
}

pub fn wt2_step<R: Rng + ?Sized>(
    coeffs: &SdeCoefficients,
    drift: &EffectiveDrift,
    x: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    ContinuousStepper::new(SchemeKind::Wt2, coeffs, drift).step(x, dt, rng)
}

pub fn nv_step<R: Rng + ?Sized>(
    coeffs: &SdeCoefficients,
    drift: &EffectiveDrift,
    x: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    ContinuousStepper::new(SchemeKind::Nv, coeffs, drift).step(x, dt, rng)
}

/// Closed-form `E[X₁²]` of `n` equal steps on `dX = X dt + X dB`, `X₀ = 1`.
///
/// Both coefficients are linear so a step is `x ↦ x·M` with `M` i.i.d.,
/// and the answer is `E[M²]ⁿ`.
pub fn gbm_second_moment(kind: SchemeKind, n: u32) -> Result<f64> {
    let coeffs = SdeCoefficients {
        drift: Coefficient::linear(1.0),
        diffusion: Coefficient::linear(1.0),
        jump: Coefficient::constant(0.0),
    };
    let stepper = ContinuousStepper::new(kind, &coeffs, &EffectiveDrift::new(&coeffs, 0.0));
    let m2 = stepper.expected_step(1.0, 1.0 / n as f64, |y| y * y)?;
    Ok(m2.powi(n as i32))
}
