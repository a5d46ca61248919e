//! Infinite-activity Lévy measures given by a density.
//!
//! A [`LevyMeasure`] wraps any [`LevyDensity`] and answers tail-mass and
//! partial-moment queries. Densities may provide closed forms through the
//! hook methods; adaptive quadrature is always available as a fallback and is
//! exposed separately (`quad_*`) so the two routes can be cross-checked.

mod cgmy;
mod sampler;
mod table;

use std::fmt;
use std::sync::Arc;

use crate::error::{LevyError, Result};
use crate::quadrature::{integrate_dyadic, integrate_to_origin};

pub use cgmy::{Cgmy, CgmyParams};
pub use sampler::{TailSampler, TABLE_POINTS_PER_SIDE};
pub use table::TabulatedDensity;

/// Default relative quadrature tolerance.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Integration region for partial moments, in terms of `|y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `0 < |y| ≤ a`
    Inside(f64),
    /// `|y| > a`
    Outside(f64),
    /// `y ≠ 0`
    Whole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    /// `∫ y^k ν(dy)`
    Signed,
    /// `∫ |y|^k ν(dy)`
    Absolute,
}

/// A Lévy density on `ℝ \ {0}`.
pub trait LevyDensity: Send + Sync + fmt::Debug {
    fn density(&self, y: f64) -> f64;

    /// `(y_min, y_max)` with `y_min < 0 < y_max`; mass outside is negligible.
    fn support(&self) -> (f64, f64);

    /// Blow-up index `α` of the density at the origin (`ν(y) ~ |y|^{-1-α}`),
    /// if known. Used to reject divergent moments up front.
    fn blowup_index(&self) -> Option<f64> {
        None
    }

    /// Closed-form `ν(|y| > cutoff)`.
    fn tail_mass_closed(&self, _cutoff: f64) -> Option<f64> {
        None
    }

    /// Closed-form partial moment.
    fn moment_closed(&self, _k: u32, _region: Region, _mode: MomentMode) -> Option<f64> {
        None
    }
}

/// Density given by a closure with explicit support.
pub struct FnDensity {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    support: (f64, f64),
}

impl FnDensity {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support: (f64, f64)) -> Self {
        Self {
            f: Box::new(f),
            support,
        }
    }
}

impl fmt::Debug for FnDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDensity")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl LevyDensity for FnDensity {
    fn density(&self, y: f64) -> f64 {
        if y < self.support.0 || y > self.support.1 {
            0.0
        } else {
            (self.f)(y)
        }
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Shareable, immutable Lévy measure with quadrature tolerance.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    density: Arc<dyn LevyDensity>,
    quad_tol: f64,
}

impl LevyMeasure {
    pub fn new(density: impl LevyDensity + 'static) -> Self {
        Self {
            density: Arc::new(density),
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support: (f64, f64)) -> Self {
        Self::new(FnDensity::new(f, support))
    }

    pub fn cgmy(params: CgmyParams) -> Result<Self> {
        Ok(Self::new(Cgmy::new(params)?))
    }

    pub fn with_quad_tol(mut self, quad_tol: f64) -> Self {
        self.quad_tol = quad_tol;
        self
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn density(&self, y: f64) -> f64 {
        self.density.density(y)
    }

    pub fn support(&self) -> (f64, f64) {
        self.density.support()
    }

    pub fn blowup_index(&self) -> Option<f64> {
        self.density.blowup_index()
    }

    /// `ν(|y| > cutoff)`, closed form when available.
    pub fn tail_mass(&self, cutoff: f64) -> Result<f64> {
        if !(cutoff > 0.0) {
            return Err(LevyError::invalid("cutoff", format!("must be > 0, got {cutoff}")));
        }
        match self.density.tail_mass_closed(cutoff) {
            Some(v) => Ok(v),
            None => self.quad_tail_mass(cutoff),
        }
    }

    /// `ν(|y| > cutoff)` by quadrature only.
    pub fn quad_tail_mass(&self, cutoff: f64) -> Result<f64> {
        self.quad_side_sum(0, Region::Outside(cutoff), MomentMode::Absolute)
    }

    /// `∫_region y^k ν(dy)` (signed) or `∫_region |y|^k ν(dy)` (absolute).
    pub fn partial_moment(&self, k: u32, region: Region, mode: MomentMode) -> Result<f64> {
        self.check_moment(k, region)?;
        match self.density.moment_closed(k, region, mode) {
            Some(v) => Ok(v),
            None => self.quad_side_sum(k, region, mode),
        }
    }

    /// Partial moment by quadrature only.
    pub fn quad_partial_moment(&self, k: u32, region: Region, mode: MomentMode) -> Result<f64> {
        self.check_moment(k, region)?;
        self.quad_side_sum(k, region, mode)
    }

    fn check_moment(&self, k: u32, region: Region) -> Result<()> {
        if let Region::Inside(a) | Region::Outside(a) = region {
            if !(a > 0.0) {
                return Err(LevyError::invalid("region", format!("bound must be > 0, got {a}")));
            }
        }
        if !matches!(region, Region::Outside(_)) {
            if let Some(alpha) = self.blowup_index() {
                if f64::from(k) <= alpha {
                    return Err(LevyError::DivergentMoment { k });
                }
            }
        }
        Ok(())
    }

    fn quad_side_sum(&self, k: u32, region: Region, mode: MomentMode) -> Result<f64> {
        let (lo, hi) = self.support();
        let tol = 0.1 * self.quad_tol;
        let kf = k as i32;
        let pos_f = |u: f64| u.powi(kf) * self.density(u);
        let neg_f = |u: f64| u.powi(kf) * self.density(-u);
        let side = |f: &dyn Fn(f64) -> f64, extent: f64| -> Result<f64> {
            let v = match region {
                Region::Inside(a) => integrate_to_origin(&f, a.min(extent), tol)?.value,
                Region::Outside(a) => integrate_dyadic(&f, a, extent, tol)?.value,
                Region::Whole => {
                    let split = extent.min(1.0);
                    integrate_to_origin(&f, split, tol)?.value + integrate_dyadic(&f, split, extent, tol)?.value
                }
            };
            Ok(v)
        };
        // |y|^k grows, so moments integrate past the sampling extent
        let reach = if k == 0 { 1.0 } else { 4.0 };
        let pos = side(&pos_f, reach * hi)?;
        let neg = side(&neg_f, -reach * lo)?;
        let sign = match mode {
            MomentMode::Signed if k % 2 == 1 => -1.0,
            _ => 1.0,
        };
        Ok(pos + sign * neg)
    }

    /// Inverse-CDF sampler for `ν` restricted to `|y| > cutoff`.
    pub fn tail_sampler(&self, cutoff: f64) -> Result<TailSampler> {
        TailSampler::new(self, cutoff)
    }
}

/// Smallest `y` (both sides combined) with `ν(|·| > y) < 1e-12 ν(|·| > 1)`.
pub(crate) fn default_extent(tail: impl Fn(f64) -> f64) -> f64 {
    let target = 1e-12 * tail(1.0);
    let mut hi = 2.0;
    while tail(hi) >= target {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    let mut lo = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
