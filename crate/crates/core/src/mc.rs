//! Monte Carlo estimation of `E[f(X₁)]` with reproducible parallel streams.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{build, ApproxOrder, BuildOptions, FiniteApprox};
use crate::error::{LevyError, Result};
use crate::jump_adapted::{JumpAdaptedSimulator, LevyModel, StepperConfig};
use crate::levy_measure::{LevyMeasure, MomentMode, Region};
use crate::schemes::SchemeKind;

/// Paths per reduction unit. Fixed so that results do not depend on the
/// number of workers.
pub const BATCH_SIZE: u64 = 4096;

/// Standard error the normalized cost is scaled to.
pub const TARGET_SE: f64 = 1e-3;

/// RNG for path `index` under `seed`: ChaCha8 keyed by the seed with the
/// path index as stream id, so no path depends on any other.
pub fn stream_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: u64,
    pub seed: u64,
    pub wallclock_seconds: f64,
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub paths: u64,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    pub stepper: StepperConfig,
}

impl McOptions {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            workers: 0,
            stepper: StepperConfig::default(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_substeps(mut self, substeps: u32) -> Self {
        self.stepper = StepperConfig { substeps };
        self
    }
}

/// Running mean and centred sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64),
        }
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LevyError::InternalConsistency(format!("thread pool: {e}")))
}

/// Mean and standard error of `f(X̄₁)` over `opts.paths` paths.
pub fn estimate<F>(
    model: &LevyModel,
    approx: &FiniteApprox,
    scheme: SchemeKind,
    f: F,
    opts: McOptions,
) -> Result<MCResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let sim = JumpAdaptedSimulator::new(model, approx, scheme, opts.stepper)?;
    estimate_with(&sim, f, opts)
}

/// As [`estimate`] with a prepared simulator; `opts.stepper` is ignored.
pub fn estimate_with<F>(sim: &JumpAdaptedSimulator, f: F, opts: McOptions) -> Result<MCResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if opts.paths < 2 {
        return Err(LevyError::invalid("paths", "need at least 2 paths"));
    }
    let start = Instant::now();
    let n_batches = opts.paths.div_ceil(BATCH_SIZE);
    let run_batch = |b: u64| -> Result<Moments> {
        let mut acc = Moments::default();
        let end = ((b + 1) * BATCH_SIZE).min(opts.paths);
        for i in b * BATCH_SIZE..end {
            let mut rng = stream_for(opts.seed, i);
            let x = sim.simulate(&mut rng, false)?.x_final;
            let y = f(x);
            if !y.is_finite() {
                return Err(LevyError::TaintedEstimate { path: i });
            }
            acc.push(y);
        }
        Ok(acc)
    };
    let batches: Vec<Result<Moments>> =
        thread_pool(opts.workers)?.install(|| (0..n_batches).into_par_iter().map(run_batch).collect());
    // index-ordered reduction: bit-identical for any worker count
    let mut total = Moments::default();
    for b in batches {
        total = total.merge(b?);
    }
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(MCResult {
        estimate: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        paths: total.n,
        seed: opts.seed,
        wallclock_seconds: start.elapsed().as_secs_f64(),
        bias: None,
    })
}

impl MCResult {
    pub fn with_reference(mut self, reference: f64) -> Self {
        self.bias = Some(self.estimate - reference);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub order: ApproxOrder,
    pub scheme: SchemeKind,
    pub estimate: f64,
    pub std_error: f64,
    pub bias: f64,
    #[serde(rename = "wallclock_s")]
    pub wallclock_seconds: f64,
    /// Wallclock scaled to a standard error of [`TARGET_SE`].
    #[serde(rename = "normalized_s")]
    pub seconds_normalized: f64,
}

impl SweepRecord {
    pub fn from_result(lambda: f64, order: ApproxOrder, scheme: SchemeKind, r: &MCResult, reference: f64) -> Self {
        Self {
            lambda,
            order,
            scheme,
            estimate: r.estimate,
            std_error: r.std_error,
            bias: r.estimate - reference,
            wallclock_seconds: r.wallclock_seconds,
            seconds_normalized: r.wallclock_seconds * (r.std_error / TARGET_SE).powi(2),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-cell seeds.
fn mix_seed(seed: u64, cell: u64) -> u64 {
    let mut z = seed ^ cell.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed used for cell `cell` (row-major over orders, schemes, Λ) of a sweep.
pub fn cell_seed(seed: u64, cell: u64) -> u64 {
    mix_seed(seed, cell)
}

/// One record per `(order, scheme, Λ)` with bias against `reference`.
pub fn convergence_sweep<F>(
    model: &LevyModel,
    orders: &[ApproxOrder],
    schemes: &[SchemeKind],
    lambda_grid: &[f64],
    build_opts: BuildOptions,
    f: F,
    opts: McOptions,
    reference: f64,
) -> Result<Vec<SweepRecord>>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut out = Vec::with_capacity(orders.len() * schemes.len() * lambda_grid.len());
    let mut cell = 0u64;
    for &order in orders {
        for &scheme in schemes {
            for &lambda in lambda_grid {
                let approx = build(&model.measure, order, lambda, build_opts)?;
                let cell_opts = McOptions {
                    seed: cell_seed(opts.seed, cell),
                    ..opts
                };
                let r = estimate(model, &approx, scheme, &f, cell_opts)?;
                out.push(SweepRecord::from_result(lambda, order, scheme, &r, reference));
                cell += 1;
            }
        }
    }
    Ok(out)
}

/// `E[X₁^k]` for the stochastic exponential `X = x₀ ℰ(γ₀t + σ₀B + Z)` with `Z`
/// a martingale:
/// `x₀^k exp(kγ₀ + k(k−1)σ₀²/2 + ∫((1+y)^k − 1 − ky) ν(dy))`.
pub fn stochastic_exponential_moment(k: u32, gamma0: f64, sigma0: f64, measure: &LevyMeasure, x0: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let kf = k as f64;
    let mut jump_part = 0.0;
    let mut binom = kf * (kf - 1.0) / 2.0;
    for j in 2..=k {
        jump_part += binom * measure.partial_moment(j, Region::Whole, MomentMode::Signed)?;
        binom *= (kf - j as f64) / (j as f64 + 1.0);
    }
    let log = kf * gamma0 + kf * (kf - 1.0) * sigma0 * sigma0 / 2.0 + jump_part;
    Ok(x0.powi(k as i32) * log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::build_oa2;
    use crate::levy_measure::CgmyParams;
    use crate::schemes::SdeCoefficients;
    use rand::Rng;

    fn cgmy(c: f64, alpha: f64) -> LevyMeasure {
        LevyMeasure::cgmy(CgmyParams {
            c,
            lambda_plus: 3.5,
            lambda_minus: 2.0,
            alpha,
        })
        .unwrap()
    }

    fn model(measure: LevyMeasure) -> LevyModel {
        LevyModel::martingale(SdeCoefficients::stochastic_exponential(0.5, 0.3), measure, 1.0).unwrap()
    }

    #[test]
    fn streams_are_pure_functions_of_seed_and_index() {
        let a: Vec<u64> = (0..5)
            .map(|_| 0)
            .scan(stream_for(1, 7), |r, _| Some(r.random()))
            .collect();
        let b: Vec<u64> = (0..5)
            .map(|_| 0)
            .scan(stream_for(1, 7), |r, _| Some(r.random()))
            .collect();
        let c: Vec<u64> = (0..5)
            .map(|_| 0)
            .scan(stream_for(2, 7), |r, _| Some(r.random()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let n = 10_000;
        let draw = |i| {
            let mut r = stream_for(42, i);
            (0..n).map(|_| r.random::<f64>()).collect::<Vec<_>>()
        };
        for (i, j) in [(0, 1), (1, 2), (5, 1000)] {
            let (x, y) = (draw(i), draw(j));
            let mx = x.iter().sum::<f64>() / n as f64;
            let my = y.iter().sum::<f64>() / n as f64;
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            let rho = sxy / (sxx * syy).sqrt();
            assert!(rho.abs() < 0.03, "({i},{j}): {rho}");
        }
    }

    #[test]
    fn welford_merge_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3 - 5.0).collect();
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|x| a.push(*x));
        xs[313..].iter().for_each(|x| b.push(*x));
        let m = a.merge(b);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((m.m2 - m2).abs() < 1e-9 * m2);
    }

    #[test]
    fn constant_payoff_has_zero_error() {
        let m = model(cgmy(0.5, 0.5));
        let a = build_oa2(&m.measure, 2.0).unwrap();
        let r = estimate(&m, &a, SchemeKind::Wt1, |_| 2.5, McOptions::new(1000, 3)).unwrap();
        assert_eq!(r.estimate, 2.5);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.paths, 1000);
        assert!(estimate(&m, &a, SchemeKind::Wt1, |_| 2.5, McOptions::new(1, 3)).is_err());
    }

    #[test]
    fn identical_across_worker_counts() {
        let m = model(cgmy(0.1, 1.5));
        let a = build(&m.measure, ApproxOrder::Oa4, 4.0, BuildOptions::default()).unwrap();
        let run = |w| {
            estimate(
                &m,
                &a,
                SchemeKind::Wt2,
                |x| x * x,
                McOptions::new(20_000, 11).with_workers(w),
            )
            .unwrap()
        };
        let r1 = run(1);
        for w in [2, 8] {
            let r = run(w);
            assert_eq!(r.estimate.to_bits(), r1.estimate.to_bits());
            assert_eq!(r.std_error.to_bits(), r1.std_error.to_bits());
        }
    }

    #[test]
    fn tainted_payoff_names_the_first_bad_path() {
        let m = model(cgmy(0.5, 0.5));
        let a = build_oa2(&m.measure, 2.0).unwrap();
        let sim = JumpAdaptedSimulator::new(&m, &a, SchemeKind::Wt1, StepperConfig::default()).unwrap();
        let bad = {
            let mut r = stream_for(5, 0);
            sim.simulate(&mut r, false).unwrap().x_final
        };
        let err = estimate_with(
            &sim,
            |x| if x == bad { f64::NAN } else { x },
            McOptions::new(10_000, 5).with_workers(3),
        );
        assert_eq!(err, Err(LevyError::TaintedEstimate { path: 0 }));
    }

    #[test]
    fn standard_error_halves_with_four_times_the_paths() {
        let m = model(cgmy(0.5, 0.5));
        let a = build_oa2(&m.measure, 2.0).unwrap();
        let r1 = estimate(&m, &a, SchemeKind::Nv, |x| x, McOptions::new(20_000, 1)).unwrap();
        let r4 = estimate(&m, &a, SchemeKind::Nv, |x| x, McOptions::new(80_000, 2)).unwrap();
        let ratio = r4.std_error / r1.std_error;
        assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    }

    #[test]
    fn reference_moments() {
        let nu = cgmy(0.5, 0.5);
        let m1 = stochastic_exponential_moment(1, 0.5, 0.3, &nu, 1.0).unwrap();
        assert!((m1 - 0.5f64.exp()).abs() < 1e-15);
        // x² closed form with Γ(3/2) = √π/2
        let g = std::f64::consts::PI.sqrt() / 2.0;
        let jump = 0.5 * g * (3.5f64.powf(-1.5) + 2f64.powf(-1.5));
        let m2 = stochastic_exponential_moment(2, 0.5, 0.3, &nu, 1.0).unwrap();
        assert!((m2 - (1.0 + 0.09 + jump).exp()).abs() < 1e-12);
        assert!((m2 - 3.722).abs() < 5e-4, "{m2}");
        // cubic: (1+y)³ − 1 − 3y = 3y² + y³
        let m3 = stochastic_exponential_moment(3, 0.5, 0.3, &nu, 2.0).unwrap();
        let whole = |k| nu.partial_moment(k, Region::Whole, MomentMode::Signed).unwrap();
        let oracle = 8.0 * (1.5 + 3.0 * 0.09 + 3.0 * whole(2) + whole(3)).exp();
        assert!((m3 - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn sweep_cells_are_consistent_with_estimate() {
        let m = model(cgmy(0.5, 0.5));
        let opts = McOptions::new(2000, 9);
        let recs = convergence_sweep(
            &m,
            &[ApproxOrder::Oa3],
            &[SchemeKind::Nv],
            &[4.0],
            BuildOptions::default(),
            |x| x,
            opts,
            1.0,
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        let a = build(&m.measure, ApproxOrder::Oa3, 4.0, BuildOptions::default()).unwrap();
        let r = estimate(
            &m,
            &a,
            SchemeKind::Nv,
            |x| x,
            McOptions {
                seed: cell_seed(9, 0),
                ..opts
            },
        )
        .unwrap();
        let rec = &recs[0];
        assert_eq!(rec.estimate, r.estimate);
        assert_eq!(rec.bias, r.estimate - 1.0);
        let norm = rec.wallclock_seconds * (rec.std_error / TARGET_SE).powi(2);
        assert!((rec.seconds_normalized - norm).abs() <= 1e-15 * norm.abs());
        assert_ne!(cell_seed(9, 0), cell_seed(9, 1));
    }
}
