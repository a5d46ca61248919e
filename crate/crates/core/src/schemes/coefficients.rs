use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar coefficient `x ↦ c(x)` with first and second derivatives.
#[derive(Clone)]
pub enum Coefficient {
    /// `Σ_k c[k] x^k`
    Polynomial(Vec<f64>),
    Custom {
        f: ScalarFn,
        d1: Option<ScalarFn>,
        d2: Option<ScalarFn>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Coefficient::Custom { d1, d2, .. } => f
                .debug_struct("Custom")
                .field("d1", &d1.is_some())
                .field("d2", &d2.is_some())
                .finish_non_exhaustive(),
        }
    }
}

fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Polynomial(vec![c])
    }

    pub fn linear(slope: f64) -> Self {
        Coefficient::Polynomial(vec![0.0, slope])
    }

    /// User-supplied coefficient; missing derivatives use central differences.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, d1: Option<ScalarFn>, d2: Option<ScalarFn>) -> Self {
        Coefficient::Custom { f: Arc::new(f), d1, d2 }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Coefficient::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
            Coefficient::Custom { f, .. } => f(x),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self {
            Coefficient::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, ck)| acc * x + k as f64 * ck),
            Coefficient::Custom { d1: Some(d), .. } => d(x),
            Coefficient::Custom { f, .. } => {
                let h = fd_step(x);
                (f(x + h) - f(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match self {
            Coefficient::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, ck)| acc * x + (k * (k - 1)) as f64 * ck),
            Coefficient::Custom { d2: Some(d), .. } => d(x),
            Coefficient::Custom { d1: Some(d), .. } => {
                let h = fd_step(x);
                (d(x + h) - d(x - h)) / (2.0 * h)
            }
            Coefficient::Custom { f, .. } => {
                let h = 1e-4 * (1.0 + x.abs());
                (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
            }
        }
    }

    /// `(a₀, a₁)` when the coefficient is `a₀ + a₁ x`.
    pub fn affine(&self) -> Option<(f64, f64)> {
        match self {
            Coefficient::Polynomial(c) if c.iter().skip(2).all(|v| *v == 0.0) => {
                Some((c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0)))
            }
            _ => None,
        }
    }

    /// `self + k · other`
    pub fn plus_scaled(&self, other: &Coefficient, k: f64) -> Coefficient {
        match (self, other) {
            (Coefficient::Polynomial(a), Coefficient::Polynomial(b)) => {
                let len = a.len().max(b.len());
                let c = (0..len)
                    .map(|i| a.get(i).copied().unwrap_or(0.0) + k * b.get(i).copied().unwrap_or(0.0))
                    .collect();
                Coefficient::Polynomial(c)
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                let (a1, b1) = (self.clone(), other.clone());
                let (a2, b2) = (self.clone(), other.clone());
                Coefficient::Custom {
                    f: Arc::new(move |x| a.value(x) + k * b.value(x)),
                    d1: Some(Arc::new(move |x| a1.d1(x) + k * b1.d1(x))),
                    d2: Some(Arc::new(move |x| a2.d2(x) + k * b2.d2(x))),
                }
            }
        }
    }
}

/// Coefficients of `dX = b(X)dt + σ(X)dB + h(X₋)dZ` (scalar state).
#[derive(Debug, Clone)]
pub struct SdeCoefficients {
    pub drift: Coefficient,
    pub diffusion: Coefficient,
    pub jump: Coefficient,
}

impl SdeCoefficients {
    /// `h(x) = x`, `b = γ₀ h`, `σ = σ₀ h`: the stochastic exponential of
    /// `γ₀ t + σ₀ B_t + Z_t`.
    pub fn stochastic_exponential(gamma0: f64, sigma0: f64) -> Self {
        Self {
            drift: Coefficient::linear(gamma0),
            diffusion: Coefficient::linear(sigma0),
            jump: Coefficient::linear(1.0),
        }
    }

    /// `h ≡ 1`, `b ≡ γ₀`, `σ ≡ σ₀`: the Lévy process `x + γ₀ t + σ₀ B_t + Z_t`.
    pub fn additive(gamma0: f64, sigma0: f64) -> Self {
        Self {
            drift: Coefficient::constant(gamma0),
            diffusion: Coefficient::constant(sigma0),
            jump: Coefficient::constant(1.0),
        }
    }
}
