use super::LevyDensity;
use crate::error::{LevyError, Result};

/// Density sampled on a grid, linearly interpolated between neighbouring
/// nodes of the same sign and zero outside the grid.
#[derive(Debug, Clone)]
pub struct TabulatedDensity {
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ys.len() != values.len() {
            return Err(LevyError::invalid("density", "grid and values differ in length"));
        }
        if ys.len() < 2 {
            return Err(LevyError::invalid("y", "need at least two grid points"));
        }
        if ys.iter().any(|y| *y == 0.0 || !y.is_finite()) {
            return Err(LevyError::invalid("y", "grid points must be finite and non-zero"));
        }
        if ys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LevyError::invalid("y", "grid must be strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LevyError::invalid("density", "values must be finite and >= 0"));
        }
        Ok(Self { ys, values })
    }
}

impl LevyDensity for TabulatedDensity {
    fn density(&self, y: f64) -> f64 {
        let i = self.ys.partition_point(|g| *g <= y);
        if i == 0 || i == self.ys.len() {
            return if i > 0 && y == self.ys[i - 1] {
                self.values[i - 1]
            } else {
                0.0
            };
        }
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        if y0.signum() != y1.signum() {
            return 0.0;
        }
        let t = (y - y0) / (y1 - y0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }

    fn support(&self) -> (f64, f64) {
        let lo = self.ys[0].min(-f64::MIN_POSITIVE);
        let hi = self.ys[self.ys.len() - 1].max(f64::MIN_POSITIVE);
        (lo, hi)
    }
}
