use statrs::function::gamma::{gamma, gamma_li, gamma_ui};

use super::{default_extent, LevyDensity, MomentMode, Region};
use crate::error::{LevyError, Result};

/// CGMY parameters: density `C e^{-λ±|y|} / |y|^{1+α}` on each half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgmyParams {
    pub c: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub alpha: f64,
}

impl CgmyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(LevyError::invalid("c", "must be finite and > 0"));
        }
        if !(self.lambda_plus.is_finite() && self.lambda_plus > 0.0) {
            return Err(LevyError::invalid("lambda_plus", "must be finite and > 0"));
        }
        if !(self.lambda_minus.is_finite() && self.lambda_minus > 0.0) {
            return Err(LevyError::invalid("lambda_minus", "must be finite and > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(LevyError::invalid("alpha", "must lie in (0, 2)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Cgmy {
    params: CgmyParams,
    extent: f64,
}

/// Upper incomplete gamma `Γ(s, x)` for any non-integer-or-positive `s`,
/// via `Γ(s, x) = (Γ(s+1, x) - x^s e^{-x}) / s` for negative `s`.
fn upper_gamma(s: f64, x: f64) -> Option<f64> {
    if s > 0.0 {
        return Some(gamma_ui(s, x));
    }
    if s.fract() == 0.0 {
        return None;
    }
    let above = upper_gamma(s + 1.0, x)?;
    Some((above - x.powf(s) * (-x).exp()) / s)
}

impl Cgmy {
    pub fn new(params: CgmyParams) -> Result<Self> {
        params.validate()?;
        let mut cgmy = Cgmy {
            params,
            extent: f64::INFINITY,
        };
        cgmy.extent = match cgmy.tail_mass_closed(1.0) {
            Some(_) => default_extent(|y| cgmy.tail_mass_closed(y).unwrap_or(0.0)),
            None => default_extent(|y| cgmy.quad_tail(y)),
        };
        Ok(cgmy)
    }

    pub fn params(&self) -> CgmyParams {
        self.params
    }

    /// `∫ y² ν(dy) = C Γ(2-α) (λ₊^{α-2} + λ₋^{α-2})`.
    pub fn second_moment(&self) -> f64 {
        let p = self.params;
        p.c * gamma(2.0 - p.alpha) * (p.lambda_plus.powf(p.alpha - 2.0) + p.lambda_minus.powf(p.alpha - 2.0))
    }

    fn quad_tail(&self, cutoff: f64) -> f64 {
        let p = self.params;
        let f = |u: f64| p.c * ((-p.lambda_plus * u).exp() + (-p.lambda_minus * u).exp()) / u.powf(1.0 + p.alpha);
        crate::quadrature::integrate_dyadic(&f, cutoff, 200.0, 1e-12)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    /// `∫_region |y|^k e^{-λ|y|} |y|^{-1-α} dy` over one half-line.
    fn side(&self, lambda: f64, k: u32, region: Region) -> Option<f64> {
        let alpha = self.params.alpha;
        let s = f64::from(k) - alpha;
        let scale = lambda.powf(-s);
        let v = match region {
            Region::Outside(a) => upper_gamma(s, lambda * a)?,
            Region::Inside(a) => {
                if s <= 0.0 {
                    return None;
                }
                gamma_li(s, lambda * a)
            }
            Region::Whole => {
                if s <= 0.0 {
                    return None;
                }
                gamma(s)
            }
        };
        Some(scale * v)
    }
}

impl LevyDensity for Cgmy {
    fn density(&self, y: f64) -> f64 {
        let p = self.params;
        let lambda = if y > 0.0 { p.lambda_plus } else { p.lambda_minus };
        let ay = y.abs();
        p.c * (-lambda * ay).exp() / ay.powf(1.0 + p.alpha)
    }

    fn support(&self) -> (f64, f64) {
        (-self.extent, self.extent)
    }

    fn blowup_index(&self) -> Option<f64> {
        Some(self.params.alpha)
    }

    fn tail_mass_closed(&self, cutoff: f64) -> Option<f64> {
        self.moment_closed(0, Region::Outside(cutoff), MomentMode::Absolute)
    }

    fn moment_closed(&self, k: u32, region: Region, mode: MomentMode) -> Option<f64> {
        let p = self.params;
        let pos = self.side(p.lambda_plus, k, region)?;
        let neg = self.side(p.lambda_minus, k, region)?;
        let sign = if mode == MomentMode::Signed && k % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        Some(p.c * (pos + sign * neg))
    }
}
