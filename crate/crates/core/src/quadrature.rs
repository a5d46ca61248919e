//! Adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! Lévy densities blow up at the origin like `|y|^{-1-α}`, so integrals
//! touching small `|y|` are split into dyadic pieces on which the integrand
//! is smooth; each piece is then integrated adaptively.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{LevyError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_478,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const MAX_SUBDIVISIONS: usize = 2000;
const MAX_DYADIC_PIECES: usize = 1100;

/// Integral estimate with its absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

impl Estimate {
    const ZERO: Estimate = Estimate {
        value: 0.0,
        abs_error: 0.0,
    };

    fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.abs_error == other.est.abs_error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.abs_error.total_cmp(&other.est.abs_error)
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, y: f64) -> Result<f64> {
    let v = f(y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LevyError::MeasureEvaluation { y })
    }
}

/// Single 21-point Kronrod rule on `[a, b]` with the embedded 10-point Gauss
/// rule as error estimate (QUADPACK `qk21` error scaling).
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Estimate> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = eval(f, center)?;

    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Estimate { value, abs_error: err })
}

/// Globally adaptive quadrature of `f` over the finite interval `[a, b]`.
///
/// Stops once the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::ZERO);
    }
    let first = kronrod21(f, a, b)?;
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });

    while total.abs_error > abs_tol.max(rel_tol * total.value.abs()) {
        if heap.len() >= MAX_SUBDIVISIONS {
            return Err(LevyError::Tolerance {
                estimate: total.value,
                error: total.abs_error,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            return Err(LevyError::Tolerance {
                estimate: total.value,
                error: total.abs_error,
            });
        }
        let left = kronrod21(f, worst.a, mid)?;
        let right = kronrod21(f, mid, worst.b)?;
        total.value += left.value + right.value - worst.est.value;
        total.abs_error += left.abs_error + right.abs_error - worst.est.abs_error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
        });
    }

    // Re-sum to shed the drift of the incremental updates.
    let fresh = heap.iter().fold(Estimate::ZERO, |acc, s| acc.add(s.est));
    Ok(fresh)
}

/// `∫_0^a f` for `f` possibly singular (but integrable) at the origin.
///
/// Integrates over the dyadic pieces `[a 2^{-j-1}, a 2^{-j}]` until the
/// geometric extrapolation of the remaining pieces falls below the tolerance.
pub fn integrate_to_origin<F: Fn(f64) -> f64>(f: &F, a: f64, rel_tol: f64) -> Result<Estimate> {
    if a <= 0.0 {
        return Ok(Estimate::ZERO);
    }
    let piece_tol = 0.1 * rel_tol;
    let mut total = Estimate::ZERO;
    let mut prev: Option<f64> = None;
    let mut zero_run = 0;
    let mut hi = a;

    for _ in 0..MAX_DYADIC_PIECES {
        let lo = 0.5 * hi;
        let piece = integrate(f, lo, hi, piece_tol, 0.0)?;
        total = total.add(piece);
        let p = piece.value.abs();

        if p == 0.0 {
            zero_run += 1;
            if zero_run >= 8 {
                return Ok(total);
            }
        } else {
            zero_run = 0;
            if let Some(q) = prev.filter(|q| *q > 0.0) {
                let ratio = p / q;
                if ratio < 1.0 {
                    let remainder = p * ratio / (1.0 - ratio);
                    if remainder <= 0.25 * rel_tol * total.value.abs() {
                        total.value += remainder.copysign(total.value);
                        total.abs_error += remainder;
                        return Ok(total);
                    }
                }
            }
        }
        prev = Some(p);
        hi = lo;
        if hi < f64::MIN_POSITIVE {
            break;
        }
    }
    Err(LevyError::Tolerance {
        estimate: total.value,
        error: f64::INFINITY,
    })
}

/// `∫_a^b f` with `0 < a < b`, split at `a 2^j` so power-law integrands are
/// resolved near the lower end.
pub fn integrate_dyadic<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<Estimate> {
    if b <= a {
        return Ok(Estimate::ZERO);
    }
    debug_assert!(a > 0.0);
    let piece_tol = 0.1 * rel_tol;
    let mut total = Estimate::ZERO;
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        total = total.add(integrate(f, lo, hi, piece_tol, 0.0)?);
        lo = hi;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(&|x: f64| x.powi(7) - 3.0 * x * x, -1.0, 2.0, 1e-12, 0.0).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let est = integrate(&|x: f64| (20.0 * x).sin(), 0.0, 3.0, 1e-12, 0.0).unwrap();
        let exact = (1.0 - 60f64.cos()) / 20.0;
        assert!((est.value - exact).abs() < 1e-11);
    }

    #[test]
    fn integrable_singularity_at_origin() {
        // ∫_0^1 y^{-1/2} dy = 2
        let est = integrate_to_origin(&|y: f64| y.powf(-0.5), 1.0, 1e-11).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9, "{}", est.value);
        // ∫_0^2 y^{0.5} e^{-y} dy against a fine composite rule on the smooth substitution y = u²
        let est = integrate_to_origin(&|y: f64| y.sqrt() * (-y).exp(), 2.0, 1e-11).unwrap();
        let smooth = integrate(&|u: f64| 2.0 * u * u * (-u * u).exp(), 0.0, 2f64.sqrt(), 1e-13, 0.0).unwrap();
        assert!((est.value - smooth.value).abs() < 1e-10);
    }

    #[test]
    fn dyadic_power_tail() {
        // ∫_{1e-6}^{1} y^{-3/2} dy = 2 (1e3 - 1)
        let est = integrate_dyadic(&|y: f64| y.powf(-1.5), 1e-6, 1.0, 1e-12).unwrap();
        assert!((est.value / 1998.0 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(&|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, 1e-10, 0.0);
        assert!(matches!(err, Err(LevyError::MeasureEvaluation { .. })));
    }

    #[test]
    fn divergent_origin_integral_fails() {
        let err = integrate_to_origin(&|y: f64| 1.0 / y, 1.0, 1e-10);
        assert!(matches!(err, Err(LevyError::Tolerance { .. })));
    }
}
