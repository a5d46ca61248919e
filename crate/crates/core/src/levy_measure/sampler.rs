use rand::Rng;

use super::LevyMeasure;
use crate::error::{LevyError, Result};
use crate::quadrature::integrate;

/// Grid points per half-line in the inverse-CDF table.
pub const TABLE_POINTS_PER_SIDE: usize = 2048;

#[derive(Debug, Clone)]
struct SideTable {
    // |y| grid, geometric from the cutoff to the side extent
    grid: Vec<f64>,
    // normalized cumulative mass at each grid point
    cdf: Vec<f64>,
    mass: f64,
}

impl SideTable {
    fn build(density: impl Fn(f64) -> f64, cutoff: f64, extent: f64, tol: f64) -> Result<Self> {
        if extent <= cutoff {
            return Ok(Self {
                grid: vec![cutoff],
                cdf: vec![0.0],
                mass: 0.0,
            });
        }
        let n = TABLE_POINTS_PER_SIDE;
        let ratio = (extent / cutoff).ln() / (n - 1) as f64;
        let mut grid: Vec<f64> = (0..n).map(|i| cutoff * (ratio * i as f64).exp()).collect();
        grid[n - 1] = extent;

        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in grid.windows(2) {
            acc += integrate(&density, w[0], w[1], tol, 0.0)?.value;
            cdf.push(acc);
        }
        if acc > 0.0 {
            cdf.iter_mut().for_each(|c| *c /= acc);
        }
        Ok(Self { grid, cdf, mass: acc })
    }

    /// `|y|` at normalized cumulative level `v ∈ [0, 1)`, linear within a cell.
    fn invert(&self, v: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c <= v).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (y0, y1) = (self.grid[i - 1], self.grid[i]);
        if c1 > c0 {
            y0 + (v - c0) / (c1 - c0) * (y1 - y0)
        } else {
            y0
        }
    }
}

/// Sampler for `ν(dy) 1_{|y| > cutoff} / ν(|y| > cutoff)`.
///
/// Built once per cutoff; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct TailSampler {
    cutoff: f64,
    neg: SideTable,
    pos: SideTable,
}

impl TailSampler {
    pub fn new(measure: &LevyMeasure, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(LevyError::invalid("cutoff", format!("must be > 0, got {cutoff}")));
        }
        let (lo, hi) = measure.support();
        let tol = measure.quad_tol();
        let neg = SideTable::build(|u| measure.density(-u), cutoff, -lo, tol)?;
        let pos = SideTable::build(|u| measure.density(u), cutoff, hi, tol)?;
        let mass = neg.mass + pos.mass;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(LevyError::DegenerateTail { cutoff, mass });
        }
        Ok(Self { cutoff, neg, pos })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Tabulated tail mass (within quadrature tolerance of `tail_mass`).
    pub fn mass(&self) -> f64 {
        self.neg.mass + self.pos.mass
    }

    /// Jump size for a uniform level `u ∈ [0, 1)`.
    pub fn sample_uniform(&self, u: f64) -> f64 {
        let total = self.mass();
        let level = u * total;
        let y = if level < self.neg.mass {
            -self.neg.invert(level / self.neg.mass)
        } else {
            self.pos.invert(((level - self.neg.mass) / self.pos.mass).min(1.0))
        };
        // keep the support strict even at a cell boundary
        if y.abs() <= self.cutoff {
            self.cutoff.next_up().copysign(y)
        } else {
            y
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_uniform(rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_tail_is_uniform_on_both_wings() {
        let m = LevyMeasure::from_fn(|_| 1.0, (-1.0, 1.0));
        let s = m.tail_sampler(0.5).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        assert!(draws.iter().all(|y| y.abs() > 0.5 && y.abs() <= 1.0));
        draws.sort_by(f64::total_cmp);
        // exact CDF of the uniform law on [-1,-0.5] ∪ [0.5,1]
        let cdf = |y: f64| {
            if y < -0.5 {
                (y + 1.0).max(0.0)
            } else if y < 0.5 {
                0.5
            } else {
                0.5 + (y - 0.5).min(0.5)
            }
        };
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let f = cdf(*y);
                (f - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn empty_tail_is_degenerate() {
        let m = LevyMeasure::from_fn(|_| 1.0, (-1.0, 1.0));
        assert!(matches!(m.tail_sampler(1.5), Err(LevyError::DegenerateTail { .. })));
    }

    #[test]
    fn extreme_levels_stay_in_support() {
        let m = LevyMeasure::from_fn(|_| 1.0, (-1.0, 1.0));
        let s = m.tail_sampler(0.25).unwrap();
        for u in [0.0, 1e-17, 0.5 - 1e-16, 0.5, 1.0 - f64::EPSILON] {
            let y = s.sample_uniform(u);
            assert!(y.abs() > 0.25 && y.abs() <= 1.0, "u={u} y={y}");
        }
    }
}
