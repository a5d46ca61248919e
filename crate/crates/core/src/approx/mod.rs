//! Optimal finite-activity approximations of a Lévy measure.
//!
//! For a jump budget `Λ` the approximating measure `ν̄` keeps `ν` on
//! `{|y| > cutoff}` and replaces the small jumps by at most two atoms chosen
//! to match the low-order moments of `ν`:
//!
//! | order | cutoff        | atoms   | matched moments |
//! |-------|---------------|---------|-----------------|
//! | 2     | `ε`           | none    | `m₀`            |
//! | 3     | `ε`           | `±2ε`   | `m₀, m₂`        |
//! | 4     | `ε√(√2 - 1)`  | `±ε`    | `m₀, m₂, m₃`    |
//!
//! with `ε` fixed by the intensity constraint `ν̄(ℝ) = Λ`.

mod hamburger;
mod rates;
mod solver;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LevyError, Result};
use crate::levy_measure::{LevyMeasure, MomentMode, Region, TailSampler};

pub use hamburger::{hankel_feasible, minimal_intensity, MomentVector};
pub use rates::{fit_log_log_slope, rate_curve, RateCurve, RatePoint};
pub use solver::{solve_epsilon, INTENSITY_RTOL};

/// `√(√2 - 1)`, ratio of the OA4 truncation level to its atom location.
pub fn oa4_cutoff_ratio() -> f64 {
    (std::f64::consts::SQRT_2 - 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ApproxOrder {
    Oa2,
    Oa3,
    Oa4,
}

impl ApproxOrder {
    pub const ALL: [ApproxOrder; 3] = [ApproxOrder::Oa2, ApproxOrder::Oa3, ApproxOrder::Oa4];

    pub fn n(self) -> u32 {
        match self {
            ApproxOrder::Oa2 => 2,
            ApproxOrder::Oa3 => 3,
            ApproxOrder::Oa4 => 4,
        }
    }
}

impl TryFrom<u32> for ApproxOrder {
    type Error = LevyError;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            2 => Ok(ApproxOrder::Oa2),
            3 => Ok(ApproxOrder::Oa3),
            4 => Ok(ApproxOrder::Oa4),
            other => Err(LevyError::UnsupportedOrder(other)),
        }
    }
}

impl fmt::Display for ApproxOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OA{}", self.n())
    }
}

impl FromStr for ApproxOrder {
    type Err = LevyError;

    /// Accepts `2`, `oa2`, `OA2`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t.strip_prefix("OA").or_else(|| t.strip_prefix("oa")).unwrap_or(t);
        let n: u32 = digits
            .parse()
            .map_err(|_| LevyError::invalid("order", format!("cannot parse {s:?}")))?;
        ApproxOrder::try_from(n)
    }
}

impl Serialize for ApproxOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ApproxOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildOptions {
    /// OA3 only: split the atom mass so the third moment is matched too.
    pub match_third_moment: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    pub mass: f64,
}

/// Finite approximating measure `ν̄ = ν 1_{|y|>cutoff} + Σ mass δ_y`.
#[derive(Debug)]
pub struct FiniteApprox {
    measure: LevyMeasure,
    order: ApproxOrder,
    epsilon: f64,
    cutoff: f64,
    atoms: Vec<Atom>,
    tail_mass: f64,
    sampler: OnceLock<TailSampler>,
}

impl Clone for FiniteApprox {
    fn clone(&self) -> Self {
        let sampler = OnceLock::new();
        if let Some(s) = self.sampler.get() {
            let _ = sampler.set(s.clone());
        }
        Self {
            measure: self.measure.clone(),
            order: self.order,
            epsilon: self.epsilon,
            cutoff: self.cutoff,
            atoms: self.atoms.clone(),
            tail_mass: self.tail_mass,
            sampler,
        }
    }
}

impl FiniteApprox {
    /// The empty approximation (`Λ = 0`): no jumps are simulated.
    pub fn without_jumps(measure: &LevyMeasure) -> Self {
        Self {
            measure: measure.clone(),
            order: ApproxOrder::Oa2,
            epsilon: f64::INFINITY,
            cutoff: f64::INFINITY,
            atoms: Vec::new(),
            tail_mass: 0.0,
            sampler: OnceLock::new(),
        }
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn order(&self) -> ApproxOrder {
        self.order
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `ν(|y| > cutoff)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `Λ = ν̄(ℝ)`, the jump intensity of the approximation.
    pub fn lambda_total(&self) -> f64 {
        self.tail_mass + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// `∫ y^k ν̄(dy)` for `k ≥ 1`.
    pub fn moment(&self, k: u32, mode: MomentMode) -> Result<f64> {
        let tail = if self.cutoff.is_finite() {
            self.measure.partial_moment(k, Region::Outside(self.cutoff), mode)?
        } else {
            0.0
        };
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let y = if mode == MomentMode::Absolute { a.y.abs() } else { a.y };
                a.mass * y.powi(k as i32)
            })
            .sum();
        Ok(tail + atoms)
    }

    /// Jump-size sampler for the `ν`-part of `ν̄`, built on first use.
    pub fn sampler(&self) -> Result<&TailSampler> {
        if let Some(s) = self.sampler.get() {
            return Ok(s);
        }
        let built = self.measure.tail_sampler(self.cutoff)?;
        Ok(self.sampler.get_or_init(|| built))
    }
}

/// Truncation-only approximation: `ν̄ = ν 1_{|y| > ε}` with `ν(|y| > ε) = Λ`.
pub fn build_oa2(measure: &LevyMeasure, lambda: f64) -> Result<FiniteApprox> {
    let eps = solve_epsilon(|e| measure.tail_mass(e), lambda)?;
    Ok(FiniteApprox {
        measure: measure.clone(),
        order: ApproxOrder::Oa2,
        epsilon: eps,
        cutoff: eps,
        atoms: Vec::new(),
        tail_mass: measure.tail_mass(eps)?,
        sampler: OnceLock::new(),
    })
}

/// Truncation at `ε` plus atoms at `±2ε` carrying the small-jump second moment.
pub fn build_oa3(measure: &LevyMeasure, lambda: f64, opts: BuildOptions) -> Result<FiniteApprox> {
    let small_m2 = |e: f64| measure.partial_moment(2, Region::Inside(e), MomentMode::Signed);
    let eps = solve_epsilon(|e| Ok(measure.tail_mass(e)? + small_m2(e)? / (4.0 * e * e)), lambda)?;

    let s = small_m2(eps)?;
    let total = s / (4.0 * eps * eps);
    let skew = if opts.match_third_moment {
        let m3 = measure.partial_moment(3, Region::Inside(eps), MomentMode::Signed)?;
        m3 / (8.0 * eps.powi(3))
    } else {
        0.0
    };
    let (left, right) = (0.5 * (total - skew), 0.5 * (total + skew));
    if left < 0.0 || right < 0.0 {
        return Err(LevyError::InternalConsistency(format!(
            "negative OA3 atom mass ({left}, {right})"
        )));
    }
    Ok(FiniteApprox {
        measure: measure.clone(),
        order: ApproxOrder::Oa3,
        epsilon: eps,
        cutoff: eps,
        atoms: vec![
            Atom {
                y: -2.0 * eps,
                mass: left,
            },
            Atom {
                y: 2.0 * eps,
                mass: right,
            },
        ],
        tail_mass: measure.tail_mass(eps)?,
        sampler: OnceLock::new(),
    })
}

/// Truncation at `cε`, `c = √(√2 - 1)`, plus atoms at `±ε` matching the
/// second and third moments of the removed small jumps.
pub fn build_oa4(measure: &LevyMeasure, lambda: f64) -> Result<FiniteApprox> {
    let c = oa4_cutoff_ratio();
    let intensity = |e: f64| -> Result<f64> {
        let m2 = measure.partial_moment(2, Region::Inside(c * e), MomentMode::Signed)?;
        Ok(measure.tail_mass(c * e)? + m2 / (e * e))
    };
    let eps = solve_epsilon(intensity, lambda)?;
    let cutoff = c * eps;

    let m2 = measure.partial_moment(2, Region::Inside(cutoff), MomentMode::Signed)?;
    let m3 = measure.partial_moment(3, Region::Inside(cutoff), MomentMode::Signed)?;
    // |M₃| ≤ cε M₂ ≤ ε M₂ keeps both masses nonnegative
    if m3.abs() > eps * m2 * (1.0 + 1e-12) {
        return Err(LevyError::InternalConsistency(format!(
            "small-jump moments violate |M3| <= eps M2: M2={m2}, M3={m3}, eps={eps}"
        )));
    }
    // atoms carry m₀..m₃ of the small jumps; their budget must reach the
    // minimal intensity of that moment problem
    let tail_mass = measure.tail_mass(cutoff)?;
    let floor = minimal_intensity(&MomentVector::new(vec![0.0, 0.0, m2, m3]), 3)?;
    if lambda - tail_mass < floor * (1.0 - INTENSITY_RTOL) {
        return Err(LevyError::InternalConsistency(format!(
            "atom budget {} below minimal intensity {floor}",
            lambda - tail_mass
        )));
    }
    let scale = 0.5 / eps.powi(3);
    let left = scale * (eps * m2 - m3);
    let right = scale * (eps * m2 + m3);
    if left < -1e-15 * (left + right) || right < -1e-15 * (left + right) {
        return Err(LevyError::InternalConsistency(format!(
            "OA4 atoms infeasible: masses ({left}, {right})"
        )));
    }
    Ok(FiniteApprox {
        measure: measure.clone(),
        order: ApproxOrder::Oa4,
        epsilon: eps,
        cutoff,
        atoms: vec![
            Atom {
                y: -eps,
                mass: left.max(0.0),
            },
            Atom {
                y: eps,
                mass: right.max(0.0),
            },
        ],
        tail_mass,
        sampler: OnceLock::new(),
    })
}

pub fn build(measure: &LevyMeasure, order: ApproxOrder, lambda: f64, opts: BuildOptions) -> Result<FiniteApprox> {
    match order {
        ApproxOrder::Oa2 => build_oa2(measure, lambda),
        ApproxOrder::Oa3 => build_oa3(measure, lambda, opts),
        ApproxOrder::Oa4 => build_oa4(measure, lambda),
    }
}

/// `J(ν̄) = ∫ |y|^n |ν - ν̄|(dy)`: the small jumps of `ν` plus the atoms.
pub fn error_functional(approx: &FiniteApprox) -> Result<f64> {
    let n = approx.order.n();
    let small = approx
        .measure
        .partial_moment(n, Region::Inside(approx.cutoff), MomentMode::Absolute)?;
    let atoms: f64 = approx.atoms.iter().map(|a| a.mass * a.y.abs().powi(n as i32)).sum();
    Ok(small + atoms)
}

/// `∫ y^i (ν - ν̄)(dy)` for `1 ≤ i ≤ n`, and `∫ |y|^{n+1} |ν - ν̄|(dy)` for `i = n + 1`.
pub fn moment_mismatch(approx: &FiniteApprox, i: u32) -> Result<f64> {
    let n = approx.order.n();
    if i == 0 || i > n + 1 {
        return Err(LevyError::invalid("i", format!("must lie in 1..={}, got {i}", n + 1)));
    }
    let mode = if i == n + 1 {
        MomentMode::Absolute
    } else {
        MomentMode::Signed
    };
    let small = approx.measure.partial_moment(i, Region::Inside(approx.cutoff), mode)?;
    let atoms: f64 = approx
        .atoms
        .iter()
        .map(|a| {
            let y = if mode == MomentMode::Absolute { a.y.abs() } else { a.y };
            a.mass * y.powi(i as i32)
        })
        .sum();
    Ok(match mode {
        MomentMode::Signed => small - atoms,
        MomentMode::Absolute => small + atoms,
    })
}

/// Serializable view of a [`FiniteApprox`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSummary {
    pub order: u32,
    pub lambda: f64,
    pub epsilon: f64,
    pub cutoff: f64,
    pub tail_mass: f64,
    pub atoms: Vec<Atom>,
    pub gamma_bar: f64,
}

impl ApproxSummary {
    pub fn new(approx: &FiniteApprox, gamma_bar: f64) -> Self {
        Self {
            order: approx.order.n(),
            lambda: approx.lambda_total(),
            epsilon: approx.epsilon,
            cutoff: approx.cutoff,
            tail_mass: approx.tail_mass,
            atoms: approx.atoms.clone(),
            gamma_bar,
        }
    }
}
