use super::{build, error_functional, ApproxOrder, BuildOptions};
use crate::error::{LevyError, Result};
use crate::levy_measure::LevyMeasure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub lambda: f64,
    pub epsilon: f64,
    /// Error functional `J(ν̄)` at this intensity.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub order: ApproxOrder,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log J` against `log Λ`.
    pub slope: f64,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn fit_log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LevyError::invalid("grid", "need at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(LevyError::invalid("grid", "log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Error functional of the optimal approximation along an intensity grid.
///
/// The grid must be strictly increasing and span at least two decades.
pub fn rate_curve(measure: &LevyMeasure, order: ApproxOrder, grid: &[f64], opts: BuildOptions) -> Result<RateCurve> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LevyError::invalid(
            "lambda_grid",
            "must be strictly increasing with >= 2 points",
        ));
    }
    if grid[grid.len() - 1] / grid[0] < 100.0 * (1.0 - 1e-12) {
        return Err(LevyError::invalid("lambda_grid", "must span at least two decades"));
    }
    let points = grid
        .iter()
        .map(|&lambda| {
            let approx = build(measure, order, lambda, opts)?;
            Ok(RatePoint {
                lambda,
                epsilon: approx.epsilon(),
                error: error_functional(&approx)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let errors: Vec<f64> = points.iter().map(|p| p.error).collect();
    let slope = fit_log_log_slope(&lambdas, &errors)?;
    Ok(RateCurve { order, points, slope })
}
