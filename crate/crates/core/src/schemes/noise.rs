use rand::Rng;
use rand_distr::StandardNormal;

/// Law of the normalized increment `η` (the scheme uses `√Δ · η`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLaw {
    Gaussian,
    /// `±√3` with probability 1/6 each, `0` with probability 2/3.
    ThreePoint,
}

const GH_NODES: usize = 40;

impl NoiseLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseLaw::Gaussian => rng.sample(StandardNormal),
            NoiseLaw::ThreePoint => {
                let u: f64 = rng.random();
                if u < 1.0 / 6.0 {
                    -3f64.sqrt()
                } else if u < 1.0 / 3.0 {
                    3f64.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// Nodes and weights integrating polynomials of `η` exactly (up to degree
    /// 79 for the Gaussian rule).
    pub fn quadrature(self) -> Vec<(f64, f64)> {
        match self {
            NoiseLaw::Gaussian => gauss_hermite_probabilists(GH_NODES),
            NoiseLaw::ThreePoint => vec![(-3f64.sqrt(), 1.0 / 6.0), (0.0, 2.0 / 3.0), (3f64.sqrt(), 1.0 / 6.0)],
        }
    }

    pub fn expect(self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.quadrature().into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Hermite rule for the standard normal weight, by Newton iteration on
/// the orthonormal Hermite recurrence.
fn gauss_hermite_probabilists(n: usize) -> Vec<(f64, f64)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / (pp * pp);
        out[i] = (z, w);
        out[n - 1 - i] = (-z, w);
    }
    // physicists' rule → standard normal
    let s = std::f64::consts::PI.sqrt();
    let mut rule: Vec<(f64, f64)> = out
        .into_iter()
        .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / s))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moment(law: NoiseLaw, k: i32) -> f64 {
        law.expect(|x| x.powi(k))
    }

    #[test]
    fn three_point_moments_match_normal_to_fifth_order() {
        let law = NoiseLaw::ThreePoint;
        assert!((moment(law, 0) - 1.0).abs() < 1e-15);
        assert_eq!(moment(law, 1), 0.0);
        assert!((moment(law, 2) - 1.0).abs() < 1e-15);
        assert_eq!(moment(law, 3), 0.0);
        assert!((moment(law, 4) - 3.0).abs() < 1e-14);
        assert!(moment(law, 5).abs() < 1e-14);
    }

    #[test]
    fn gauss_hermite_reproduces_normal_moments() {
        let mut double_fact = 1.0;
        for k in 0..=20 {
            let got = moment(NoiseLaw::Gaussian, k);
            if k % 2 == 1 {
                assert!(got.abs() < 1e-8, "k={k}: {got}");
            } else {
                if k > 0 {
                    double_fact *= (k - 1) as f64;
                }
                assert!((got - double_fact).abs() < 1e-11 * double_fact, "k={k}: {got}");
            }
        }
        let e = NoiseLaw::Gaussian.expect(|x| (0.7 * x).exp());
        assert!((e - (0.245f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn three_point_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 600_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let x = NoiseLaw::ThreePoint.sample(&mut rng);
            counts[if x < 0.0 {
                0
            } else if x == 0.0 {
                1
            } else {
                2
            }] += 1;
        }
        let p = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for (c, p) in counts.iter().zip(p) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() < 4.0 * sd);
        }
    }
}
