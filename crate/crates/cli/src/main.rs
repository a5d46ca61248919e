mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levysim::approx::{build, error_functional, ApproxOrder, ApproxSummary, BuildOptions};
use levysim::jump_adapted::{JumpAdaptedSimulator, LevyModel};
use levysim::levy_measure::{MomentMode, Region};
use levysim::mc::{convergence_sweep, estimate_with, stochastic_exponential_moment, stream_for, McOptions};
use levysim::schemes::{effective_drift, SchemeKind};

use config::{parse_grid, ExperimentConfig, FieldError, JumpKind, Payoff};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "levysim", version, about = "Jump-adapted simulation of Lévy-driven SDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a finite approximation of the Lévy measure and print it as JSON
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<ApproxOrder>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Tabulate cutoff and error functional over a log-spaced intensity grid (CSV)
    Rates {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<ApproxOrder>,
        /// `a:b:points`, log-spaced
        #[arg(long)]
        lambda_grid: Option<String>,
    },
    /// Monte Carlo estimate for one (order, Λ, scheme) as JSON
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        order: Option<ApproxOrder>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        scheme: Option<SchemeKind>,
        /// Write path 0 as CSV `t,x` (default file: output.trace or trace.csv)
        #[arg(long, num_args = 0..=1, value_name = "PATH")]
        trace: Option<Option<PathBuf>>,
    },
    /// Bias and cost for every (order, scheme, Λ) of the run block (CSV)
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
        /// `a:b:points`, log-spaced; replaces run.lambda_grid
        #[arg(long)]
        lambda_grid: Option<String>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    substeps: Option<u32>,
    /// Worker threads; defaults to all cores and never changes the output
    #[arg(long)]
    workers: Option<usize>,
}

impl McArgs {
    fn options(&self, cfg: &ExperimentConfig, bad: &mut Vec<FieldError>) -> McOptions {
        let paths = self.paths.unwrap_or(cfg.run.paths);
        if paths < 2 {
            bad.push(field("paths", format!("must be >= 2, got {paths}")));
        }
        let substeps = self.substeps.unwrap_or(cfg.run.substeps);
        if substeps == 0 {
            bad.push(field("substeps", "must be >= 1"));
        }
        McOptions::new(paths, self.seed.unwrap_or(cfg.run.seed))
            .with_substeps(substeps)
            .with_workers(self.workers.unwrap_or(0))
    }
}

fn field(name: &str, reason: impl Into<String>) -> FieldError {
    FieldError {
        field: name.into(),
        reason: reason.into(),
    }
}

fn check(bad: Vec<FieldError>) -> Result<(), CliError> {
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Arguments(bad))
    }
}

fn pick_lambda(flag: Option<f64>, cfg: &ExperimentConfig, bad: &mut Vec<FieldError>) -> f64 {
    let lambda = flag.unwrap_or(cfg.run.lambda_grid[0]);
    if !(lambda > 0.0 && lambda.is_finite()) {
        bad.push(field("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    lambda
}

fn pick_grid(flag: Option<&str>, default: &[f64], bad: &mut Vec<FieldError>) -> Vec<f64> {
    match flag.map(parse_grid) {
        None => default.to_vec(),
        Some(Ok(g)) => g,
        Some(Err(e)) => {
            bad.push(field("lambda-grid", e));
            Vec::new()
        }
    }
}

fn build_options(cfg: &ExperimentConfig) -> BuildOptions {
    BuildOptions {
        match_third_moment: cfg.run.match_third_moment,
    }
}

/// Writes to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let result = match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| CliError::Output {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        message: e.to_string(),
    })
}

fn csv_text<T: serde::Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    }
}

/// Closed-form `E[f(X₁)]` where one is available; `run.reference` wins.
fn reference(cfg: &ExperimentConfig, model: &LevyModel) -> Result<Option<f64>, CliError> {
    if let Some(r) = cfg.run.reference {
        return Ok(Some(r));
    }
    let nu = &model.measure;
    // drift of Z once every jump is compensated
    let drift = cfg.model.gamma0 + model.mu_z + nu.partial_moment(1, Region::Outside(1.0), MomentMode::Signed)?;
    let coeffs = cfg.run.payoff.coefficients();
    let x0 = model.x0;
    let sigma0 = cfg.model.sigma0;
    let value = match cfg.model.h {
        JumpKind::Linear => {
            let mut acc = 0.0;
            for (k, c) in coeffs.iter().enumerate() {
                if *c != 0.0 {
                    acc += c * stochastic_exponential_moment(k as u32, drift, sigma0, nu, x0)?;
                }
            }
            acc
        }
        JumpKind::Constant => {
            if coeffs.iter().skip(3).any(|c| *c != 0.0) {
                return Ok(None);
            }
            let mean = x0 + drift;
            let var = sigma0 * sigma0 + nu.partial_moment(2, Region::Whole, MomentMode::Signed)?;
            let c = |k: usize| coeffs.get(k).copied().unwrap_or(0.0);
            c(0) + c(1) * mean + c(2) * (var + mean * mean)
        }
    };
    Ok(Some(value))
}

fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Approx { common, order, lambda } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let mut bad = Vec::new();
            let lambda = pick_lambda(lambda, &cfg, &mut bad);
            check(bad)?;
            let order = order.unwrap_or(cfg.run.orders[0]);
            let model = cfg.model()?;
            let approx = build(&model.measure, order, lambda, build_options(&cfg))?;
            let summary = ApproxSummary::new(&approx, effective_drift(&model, &approx)?.gamma_bar);
            let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            json.push('\n');
            emit(common.out.as_deref().or(cfg.output.approx.as_deref()), &json)?;
            Ok(format!(
                "approx: {order} at Λ={lambda}: ε={:.6e}, cutoff={:.6e}, {} atom(s), γ̄={:.6}",
                summary.epsilon,
                summary.cutoff,
                summary.atoms.len(),
                summary.gamma_bar
            ))
        }
        Command::Rates {
            common,
            order,
            lambda_grid,
        } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let mut bad = Vec::new();
            let grid = pick_grid(lambda_grid.as_deref(), &cfg.run.rates_grid, &mut bad);
            check(bad)?;
            let order = order.unwrap_or(ApproxOrder::Oa4);
            let measure = cfg.levy_measure()?;
            #[derive(serde::Serialize)]
            struct Row {
                lambda: f64,
                epsilon: f64,
                #[serde(rename = "J")]
                j: f64,
            }
            let mut rows = Vec::with_capacity(grid.len());
            for lambda in grid {
                let approx = build(&measure, order, lambda, build_options(&cfg))?;
                rows.push(Row {
                    lambda,
                    epsilon: approx.epsilon(),
                    j: error_functional(&approx)?,
                });
            }
            emit(common.out.as_deref().or(cfg.output.rates.as_deref()), &csv_text(&rows)?)?;
            Ok(format!("rates: {order}, {} intensities", rows.len()))
        }
        Command::Simulate {
            common,
            mc,
            order,
            lambda,
            scheme,
            trace,
        } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let mut bad = Vec::new();
            let lambda = pick_lambda(lambda, &cfg, &mut bad);
            let opts = mc.options(&cfg, &mut bad);
            check(bad)?;
            let order = order.unwrap_or(cfg.run.orders[0]);
            let scheme = scheme.unwrap_or(cfg.run.schemes[0]);
            let model = cfg.model()?;
            let approx = build(&model.measure, order, lambda, build_options(&cfg))?;
            let sim = JumpAdaptedSimulator::new(&model, &approx, scheme, opts.stepper)?;
            let payoff = cfg.run.payoff.clone();
            let mut result = estimate_with(&sim, |x| payoff.eval(x), opts)?;
            if let Some(r) = reference(&cfg, &model)? {
                result = result.with_reference(r);
            }
            if let Some(path) = trace {
                let path = path
                    .or_else(|| cfg.output.trace.clone())
                    .unwrap_or_else(|| PathBuf::from("trace.csv"));
                let outcome = sim.simulate(&mut stream_for(opts.seed, 0), true)?;
                #[derive(serde::Serialize)]
                struct Point {
                    t: f64,
                    x: f64,
                }
                let points: Vec<Point> = outcome
                    .trace
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(t, x)| Point { t, x })
                    .collect();
                emit(Some(&path), &csv_text(&points)?)?;
            }
            let mut json = serde_json::to_string_pretty(&result).expect("result serializes");
            json.push('\n');
            emit(common.out.as_deref().or(cfg.output.simulate.as_deref()), &json)?;
            let bias = result.bias.map_or_else(String::new, |b| format!(", bias {b:.3e}"));
            Ok(format!(
                "simulate: {order}/{scheme} at Λ={lambda}: {:.6} ± {:.2e} over {} paths{bias} in {:.2}s",
                result.estimate, result.std_error, result.paths, result.wallclock_seconds
            ))
        }
        Command::Sweep {
            common,
            mc,
            lambda_grid,
        } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let mut bad = Vec::new();
            let grid = pick_grid(lambda_grid.as_deref(), &cfg.run.lambda_grid, &mut bad);
            let opts = mc.options(&cfg, &mut bad);
            check(bad)?;
            let model = cfg.model()?;
            let reference = reference(&cfg, &model)?.ok_or(CliError::MissingReference)?;
            let payoff: Payoff = cfg.run.payoff.clone();
            let records = convergence_sweep(
                &model,
                &cfg.run.orders,
                &cfg.run.schemes,
                &grid,
                build_options(&cfg),
                |x| payoff.eval(x),
                opts,
                reference,
            )?;
            emit(
                common.out.as_deref().or(cfg.output.sweep.as_deref()),
                &csv_text(&records)?,
            )?;
            let seconds: f64 = records.iter().map(|r| r.wallclock_seconds).sum();
            Ok(format!(
                "sweep: {} cells, reference {reference:.6}, {seconds:.1}s",
                records.len()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let record = error::ErrorRecord {
                kind: "usage",
                module: "cli",
                message: e.kind().to_string(),
                fields: Vec::new(),
            };
            let _ = e.print();
            eprintln!("{}", serde_json::json!({ "error": record }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", serde_json::json!({ "error": e.record() }));
            ExitCode::FAILURE
        }
    }
}
