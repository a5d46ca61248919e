use crate::error::{LevyError, Result};

/// Residual tolerance on the intensity constraint, relative to the target.
pub const INTENSITY_RTOL: f64 = 1e-8;

const MAX_EXPANSIONS: usize = 200;

/// Solves `F(ε) = Λ` for a strictly decreasing, continuous intensity map `F`.
///
/// The bracket is found by geometric expansion from `ε = 1` over powers of
/// two, then refined with Brent's method.
pub fn solve_epsilon<F>(intensity: F, lambda: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LevyError::invalid(
            "lambda",
            format!("must be finite and > 0, got {lambda}"),
        ));
    }
    let g = |eps: f64| intensity(eps).map(|v| v - lambda);

    let mut a = 1.0;
    let mut ga = g(a)?;
    if ga == 0.0 {
        return Ok(a);
    }
    let mut b = a;
    let mut gb = ga;
    let mut found = false;
    if ga > 0.0 {
        // F(1) too large: grow ε
        for _ in 0..MAX_EXPANSIONS {
            a = b;
            ga = gb;
            b *= 2.0;
            gb = g(b)?;
            if gb <= 0.0 {
                found = true;
                break;
            }
        }
    } else {
        for _ in 0..MAX_EXPANSIONS {
            a = b;
            ga = gb;
            b *= 0.5;
            gb = g(b)?;
            if gb >= 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            // F is bounded near the origin: a finite-activity measure
            let sup = gb + lambda;
            let prev = ga + lambda;
            if (sup - prev).abs() <= 1e-9 * sup.abs() {
                return Err(LevyError::InfeasibleIntensity { lambda, supremum: sup });
            }
        }
    }
    if !found {
        return Err(LevyError::Bracketing { lambda });
    }
    if gb == 0.0 {
        return Ok(b);
    }

    let root = brent(&g, a, ga, b, gb, 1e-13 * lambda)?;
    let residual = g(root)?.abs();
    if residual > INTENSITY_RTOL * lambda {
        return Err(LevyError::Tolerance {
            estimate: root,
            error: residual,
        });
    }
    Ok(root)
}

/// Brent's root finder on a sign-changing bracket; stops when `|g| ≤ ftol`
/// or the bracket collapses to machine resolution.
fn brent<G>(g: &G, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, ftol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..500 {
        if fb.abs() <= ftol {
            return Ok(b);
        }
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = g(b)?;
    }
    Ok(b)
}
