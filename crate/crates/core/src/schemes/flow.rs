use std::fmt;
use std::sync::Arc;

use crate::error::{LevyError, Result};

/// Autonomous scalar vector field, optionally known to be affine.
#[derive(Clone)]
pub struct Field {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    affine: Option<(f64, f64)>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("affine", &self.affine)
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            affine: None,
        }
    }

    /// `V(x) = a₀ + a₁ x`, flowed in closed form.
    pub fn affine(a0: f64, a1: f64) -> Self {
        Self {
            f: Arc::new(move |x| a0 + a1 * x),
            affine: Some((a0, a1)),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn affine_hint(&self) -> Option<(f64, f64)> {
        self.affine
    }
}

/// Time-`t` solution map of `dy/ds = V(y)` started at `x` (`t` may be negative).
///
/// Affine fields are flowed exactly; otherwise classical RK4 with
/// `⌈|t| / h_max⌉` equal substeps.
pub fn ode_flow(field: &Field, x: f64, t: f64, h_max: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(x);
    }
    let y = if let Some((a0, a1)) = field.affine {
        let z = a1 * t;
        // a₀ t (e^z - 1)/z, continuous at z = 0
        let phi = if z == 0.0 { 1.0 } else { z.exp_m1() / z };
        x * z.exp() + a0 * t * phi
    } else {
        if !(h_max > 0.0) {
            return Err(LevyError::invalid("h_max", "must be > 0"));
        }
        let n = (t.abs() / h_max).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut y = x;
        for i in 0..n {
            let k1 = field.value(y);
            let k2 = field.value(y + 0.5 * h * k1);
            let k3 = field.value(y + 0.5 * h * k2);
            let k4 = field.value(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !y.is_finite() {
                return Err(LevyError::FlowDivergence {
                    time: (i + 1) as f64 * h,
                });
            }
        }
        y
    };
    if y.is_finite() {
        Ok(y)
    } else {
        Err(LevyError::FlowDivergence { time: t })
    }
}
