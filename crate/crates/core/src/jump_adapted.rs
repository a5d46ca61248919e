//! Jump-adapted simulation of `X₁`: continuous weak steps over exponential
//! inter-jump durations, with jumps `x ← x + h(x)Δ` drawn from `ν̄ / Λ`.

use rand::Rng;
use rand_distr::Open01;

use crate::approx::FiniteApprox;
use crate::error::{LevyError, Result};
use crate::levy_measure::{LevyMeasure, MomentMode, Region, TailSampler};
use crate::schemes::{effective_drift, ContinuousStepper, EffectiveDrift, SchemeKind, SdeCoefficients};

/// `X_t = x₀ + ∫b(X)ds + ∫σ(X)dB + ∫h(X₋)dZ` on `[0, 1]`, where `Z` has Lévy
/// measure `measure` and drift `mu_z`.
#[derive(Debug, Clone)]
pub struct LevyModel {
    pub coeffs: SdeCoefficients,
    pub measure: LevyMeasure,
    pub mu_z: f64,
    pub x0: f64,
}

impl LevyModel {
    pub fn new(coeffs: SdeCoefficients, measure: LevyMeasure, mu_z: f64, x0: f64) -> Self {
        Self {
            coeffs,
            measure,
            mu_z,
            x0,
        }
    }

    /// `μ_Z = −∫_{|y|>1} y ν(dy)`, making `Z` a martingale.
    pub fn martingale(coeffs: SdeCoefficients, measure: LevyMeasure, x0: f64) -> Result<Self> {
        let mu_z = -martingale_drift_offset(&measure)?;
        Ok(Self::new(coeffs, measure, mu_z, x0))
    }
}

fn martingale_drift_offset(measure: &LevyMeasure) -> Result<f64> {
    measure.partial_moment(1, Region::Outside(1.0), MomentMode::Signed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepperConfig {
    /// Scheme steps per inter-jump leg.
    pub substeps: u32,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { substeps: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub x_final: f64,
    pub n_jumps: u32,
    /// `(t, x)` at time 0, after each jump, and at time 1.
    pub trace: Option<Vec<(f64, f64)>>,
}

/// Mean number of jumps on `[0, 1]`.
pub fn expected_jump_count(approx: &FiniteApprox) -> f64 {
    approx.lambda_total()
}

/// Everything needed to draw paths, assembled once.
#[derive(Debug, Clone)]
pub struct JumpAdaptedSimulator {
    x0: f64,
    jump: crate::schemes::Coefficient,
    stepper: ContinuousStepper,
    drift: EffectiveDrift,
    config: StepperConfig,
    lambda: f64,
    /// `(y, cumulative mass)` in list order
    atoms: Vec<(f64, f64)>,
    tail: Option<TailSampler>,
}

impl JumpAdaptedSimulator {
    pub fn new(model: &LevyModel, approx: &FiniteApprox, scheme: SchemeKind, config: StepperConfig) -> Result<Self> {
        if config.substeps == 0 {
            return Err(LevyError::invalid("substeps", "must be >= 1"));
        }
        let lambda = approx.lambda_total();
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(LevyError::invalid(
                "lambda",
                format!("intensity {lambda} must be finite and >= 0"),
            ));
        }
        let drift = effective_drift(model, approx)?;
        let stepper = ContinuousStepper::new(scheme, &model.coeffs, &drift);
        let mut cum = 0.0;
        let atoms = approx
            .atoms()
            .iter()
            .map(|a| {
                cum += a.mass;
                (a.y, cum)
            })
            .collect();
        let tail = if approx.tail_mass() > 0.0 {
            Some(approx.sampler()?.clone())
        } else {
            None
        };
        Ok(Self {
            x0: model.x0,
            jump: model.coeffs.jump.clone(),
            stepper,
            drift,
            config,
            lambda,
            atoms,
            tail,
        })
    }

    pub fn effective_drift(&self) -> &EffectiveDrift {
        &self.drift
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>() * self.lambda;
        for &(y, cum) in &self.atoms {
            if u < cum {
                return y;
            }
        }
        match &self.tail {
            Some(t) => t.sample(rng),
            // only reachable through rounding in the cumulative sum
            None => self.atoms.last().map_or(0.0, |a| a.0),
        }
    }

    fn leg<R: Rng + ?Sized>(&self, x: f64, t_start: f64, duration: f64, rng: &mut R) -> Result<f64> {
        self.stepper
            .evolve(x, duration, self.config.substeps, rng)
            .map_err(|e| LevyError::Leg {
                time: t_start,
                source: Box::new(e),
            })
    }

    /// One path on `[0, 1]`. Draw order per leg: jump time, scheme noise,
    /// jump size.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R, with_trace: bool) -> Result<PathOutcome> {
        let mut x = self.x0;
        let mut t_last = 0.0;
        let mut n_jumps = 0u32;
        let mut trace = with_trace.then(|| vec![(0.0, x)]);
        if self.lambda > 0.0 {
            loop {
                let u: f64 = rng.sample(Open01);
                let t = -u.ln() / self.lambda;
                if !(t < 1.0 - t_last) {
                    break;
                }
                x = self.leg(x, t_last, t, rng)?;
                let dz = self.jump_size(rng);
                x += self.jump.value(x) * dz;
                t_last += t;
                n_jumps += 1;
                if let Some(tr) = trace.as_mut() {
                    tr.push((t_last, x));
                }
            }
        }
        x = self.leg(x, t_last, 1.0 - t_last, rng)?;
        if let Some(tr) = trace.as_mut() {
            tr.push((1.0, x));
        }
        Ok(PathOutcome {
            x_final: x,
            n_jumps,
            trace,
        })
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    model: &LevyModel,
    approx: &FiniteApprox,
    scheme: SchemeKind,
    config: StepperConfig,
    rng: &mut R,
) -> Result<PathOutcome> {
    JumpAdaptedSimulator::new(model, approx, scheme, config)?.simulate(rng, false)
}
