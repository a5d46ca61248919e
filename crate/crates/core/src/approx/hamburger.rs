//! Minimal total mass for the truncated Hamburger moment problem with `m₁`
//! left free.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{LevyError, Result};

/// Moments `m_k = ∫ y^k ν̄(dy)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    m: Vec<f64>,
}

impl MomentVector {
    pub fn new(m: Vec<f64>) -> Self {
        Self { m }
    }

    /// Moments of `Σ mass δ_y` up to order `n`.
    pub fn from_atoms(atoms: &[(f64, f64)], n: usize) -> Self {
        let m = (0..=n)
            .map(|k| atoms.iter().map(|(y, w)| w * y.powi(k as i32)).sum())
            .collect();
        Self { m }
    }

    pub fn order(&self) -> usize {
        self.m.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.m.get(k).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    fn require(&self, k: usize) -> Result<f64> {
        self.get(k)
            .ok_or_else(|| LevyError::InvalidMoments(format!("missing moment m{k}")))
    }
}

/// Smallest `ν̄(ℝ)` over measures matching `m₂..m_n` (`m₀` ignored):
/// `0` for `n ∈ {2, 3}`, `m₂²/m₄` for `n ∈ {4, 5}`.
pub fn minimal_intensity(moments: &MomentVector, n: u32) -> Result<f64> {
    match n {
        2 | 3 => Ok(0.0),
        4 | 5 => {
            let m2 = moments.require(2)?;
            let m4 = moments.require(4)?;
            if !(m2 > 0.0 && m4 > 0.0) {
                return Err(LevyError::InvalidMoments(format!(
                    "need m2 > 0 and m4 > 0, got m2={m2}, m4={m4}"
                )));
            }
            Ok(m2 * m2 / m4)
        }
        other => Err(LevyError::UnsupportedOrder(other)),
    }
}

fn hankel(m: &[f64], q: usize, offset: usize) -> DMatrix<f64> {
    DMatrix::from_fn(q + 1 - offset, q + 1 - offset, |i, j| m[i + j + 2 * offset])
}

/// Whether some `m₁` makes `{m_{i+j}}_{i,j=0..q}` nonnegative definite, i.e.
/// whether a measure with total mass `m₀` and moments `m₂..m_{2q}` exists.
///
/// `det` is a concave quadratic in `m₁` once the inner block
/// `{m_{i+j}}_{i,j=1..q}` is positive definite; its maximum decides.
pub fn hankel_feasible(moments: &MomentVector, q: usize) -> Result<bool> {
    if q == 0 {
        return Err(LevyError::invalid("q", "must be >= 1"));
    }
    let n = 2 * q;
    let m: Vec<f64> = (0..=n).map(|k| moments.require(k)).collect::<Result<_>>()?;
    let m0 = m[0];
    if m0 < 0.0 {
        return Ok(false);
    }
    if m0 == 0.0 {
        return Ok(m[2..].iter().all(|v| *v == 0.0));
    }

    let inner = hankel(&m, q, 1);
    let eig = SymmetricEigen::new(inner.clone()).eigenvalues;
    let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let low = eig.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if low < -1e-12 * top {
        return Err(LevyError::InvalidMoments(
            "inner Hankel block is not nonnegative definite".into(),
        ));
    }
    if low <= 1e-12 * top {
        return Err(LevyError::InvalidMoments(
            "inner Hankel block is singular; determinant test is inconclusive".into(),
        ));
    }

    // det(H(m₁)) / Π diag, with diag = (m₀, m₂, ..., m_{2q}) all positive
    let norm: f64 = (0..=q).map(|i| m[2 * i]).product();
    let scale = (m0 * m[2]).sqrt();
    let det_at = |m1: f64| {
        let mut mm = m.clone();
        mm[1] = m1;
        hankel(&mm, q, 0).determinant() / norm
    };
    let (dm, d0, dp) = (det_at(-scale), det_at(0.0), det_at(scale));
    let a = 0.5 * (dp + dm) - d0;
    let b = 0.5 * (dp - dm);
    if !(a < 0.0) {
        return Err(LevyError::InternalConsistency(format!(
            "Hankel determinant not concave in m1 (curvature {a})"
        )));
    }
    // quadratic in t = m₁ / scale
    let best = d0 - b * b / (4.0 * a);
    Ok(best >= -1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let mv = MomentVector::new(vec![0.0, 0.0, 2.0, 0.0, 2.0]);
        assert_eq!(minimal_intensity(&mv, 2).unwrap(), 0.0);
        assert_eq!(minimal_intensity(&mv, 3).unwrap(), 0.0);
        assert_eq!(minimal_intensity(&mv, 4).unwrap(), 2.0);
        let mv5 = MomentVector::new(vec![0.0, 0.0, 1.0, 0.5, 3.0, 0.1]);
        assert!((minimal_intensity(&mv5, 5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(minimal_intensity(&mv, 6), Err(LevyError::UnsupportedOrder(6)));
    }

    #[test]
    fn two_symmetric_atoms_attain_the_minimum() {
        let mv = MomentVector::from_atoms(&[(1.0, 1.0), (-1.0, 1.0)], 4);
        assert_eq!(mv.as_slice(), &[2.0, 0.0, 2.0, 0.0, 2.0]);
        assert!(hankel_feasible(&mv, 2).unwrap());
        assert_eq!(minimal_intensity(&mv, 4).unwrap(), mv.get(0).unwrap());
    }

    #[test]
    fn below_minimum_is_infeasible() {
        let mv = MomentVector::new(vec![2.0 - 0.01, 0.0, 2.0, 0.0, 2.0]);
        assert!(!hankel_feasible(&mv, 2).unwrap());
        let mv = MomentVector::new(vec![2.0 + 0.01, 0.0, 2.0, 0.0, 2.0]);
        assert!(hankel_feasible(&mv, 2).unwrap());
    }

    #[test]
    fn zero_mass_with_moments_is_infeasible() {
        for q in [1, 2] {
            let mut m = vec![0.0, 0.0, 1.0, 0.2, 3.0];
            m.truncate(2 * q + 1);
            assert!(!hankel_feasible(&MomentVector::new(m), q).unwrap());
        }
    }

    #[test]
    fn any_positive_mass_works_for_second_moment_only() {
        let mv = MomentVector::new(vec![1e-6, 0.0, 5.0]);
        assert!(hankel_feasible(&mv, 1).unwrap());
    }

    #[test]
    fn inner_block_must_be_psd() {
        let mv = MomentVector::new(vec![1.0, 0.0, 1.0, 2.0, 1.0]);
        assert!(matches!(hankel_feasible(&mv, 2), Err(LevyError::InvalidMoments(_))));
    }
}
