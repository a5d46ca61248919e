use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use levysim::approx::{oa4_cutoff_ratio, ApproxSummary};
use levysim::mc::MCResult;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levysim"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Last stderr line is the JSON error record.
fn error_record(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn dataset1_with(from: &str, to: &str) -> String {
    let text = std::fs::read_to_string(bundled("dataset1.cfg")).unwrap();
    assert!(text.contains(from));
    text.replace(from, to)
}

fn approx_json(cfg: &Path, order: &str, lambda: &str) -> String {
    stdout(&run(&[
        "approx",
        "--config",
        cfg.to_str().unwrap(),
        "--order",
        order,
        "--lambda",
        lambda,
    ]))
}

#[test]
fn approx_order_four_on_dataset_one() {
    let s: ApproxSummary = serde_json::from_str(&approx_json(&bundled("dataset1.cfg"), "4", "8")).unwrap();
    assert_eq!(s.order, 4);
    assert!((s.cutoff - s.epsilon * oa4_cutoff_ratio()).abs() <= 1e-14 * s.cutoff);
    assert_eq!(s.atoms.len(), 2);
    assert_eq!(s.atoms[0].y, -s.epsilon);
    assert_eq!(s.atoms[1].y, s.epsilon);
    let total: f64 = s.atoms.iter().map(|a| a.mass).sum::<f64>() + s.tail_mass;
    assert!((total - 8.0).abs() <= 1e-7 * 8.0, "{total}");
}

#[test]
fn approx_json_round_trips_byte_for_byte() {
    for (cfg, order) in [("dataset1.cfg", "2"), ("dataset2.cfg", "3"), ("dataset2.cfg", "4")] {
        let text = approx_json(&bundled(cfg), order, "4");
        let parsed: ApproxSummary = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
        assert_eq!(text, again);
    }
}

#[test]
fn rates_on_dataset_two_follow_the_regular_variation_exponent() {
    let text = stdout(&run(&[
        "rates",
        "--config",
        bundled("dataset2.cfg").to_str().unwrap(),
        "--order",
        "4",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,epsilon,J"));
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0].ln(), v[2].ln())
        })
        .collect();
    assert_eq!(pts.len(), 9);
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    assert!((slope + 5.0 / 3.0).abs() <= 0.15, "{slope}");
}

#[test]
fn out_of_range_alpha_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &dataset1_with("alpha = 0.5", "alpha = 2.5"));
    let out = run(&[
        "approx",
        "--config",
        cfg.to_str().unwrap(),
        "--order",
        "4",
        "--lambda",
        "8",
    ]);
    let rec = error_record(&out);
    assert_eq!(rec["error"]["kind"], "validation");
    assert_eq!(rec["error"]["fields"][0], "measure.alpha");
    assert!(rec["error"]["message"].as_str().unwrap().contains("alpha"));
}

#[test]
fn every_invalid_field_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let text = dataset1_with("alpha = 0.5", "alpha = 0.0")
        .replace("lambda_plus = 3.5", "lambda_plus = -1.0")
        .replace("paths = 100000", "paths = 1")
        .replace("lambda_grid = [0.5,", "lambda_grid = [0.0,");
    let cfg = write_config(&dir, &text);
    let rec = error_record(&run(&["approx", "--config", cfg.to_str().unwrap()]));
    let fields: Vec<&str> = rec["error"]["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for f in ["measure.alpha", "measure.lambda_plus", "run.paths", "run.lambda_grid"] {
        assert!(fields.contains(&f), "{f} not in {fields:?}");
    }
}

#[test]
fn unknown_keys_and_bad_flags_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &dataset1_with("seed = ", "sed = "));
    let rec = error_record(&run(&["approx", "--config", cfg.to_str().unwrap()]));
    assert_eq!(rec["error"]["kind"], "config_syntax");

    let out = run(&[
        "simulate",
        "--config",
        bundled("dataset1.cfg").to_str().unwrap(),
        "--scheme",
        "rk4",
    ]);
    assert_eq!(error_record(&out)["error"]["kind"], "usage");

    let out = run(&[
        "simulate",
        "--config",
        bundled("dataset1.cfg").to_str().unwrap(),
        "--paths",
        "1",
    ]);
    assert_eq!(error_record(&out)["error"]["fields"][0], "paths");
}

#[test]
fn downstream_errors_carry_their_module() {
    // a huge intensity on a finite table exceeds what the measure can supply
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        r#"
[measure]
kind = "table"
ys = [-1.0, -0.5, 0.5, 1.0]
values = [1.0, 1.0, 1.0, 1.0]

[model]
gamma0 = 0.0
sigma0 = 0.2
"#,
    );
    let rec = error_record(&run(&[
        "approx",
        "--config",
        cfg.to_str().unwrap(),
        "--order",
        "2",
        "--lambda",
        "50",
    ]));
    assert_eq!(rec["error"]["module"], "approx_optimizer");
}

fn simulate(workers: &str) -> MCResult {
    let text = stdout(&run(&[
        "simulate",
        "--config",
        bundled("dataset2.cfg").to_str().unwrap(),
        "--order",
        "3",
        "--lambda",
        "4",
        "--scheme",
        "wt2",
        "--paths",
        "10000",
        "--seed",
        "5",
        "--workers",
        workers,
    ]));
    serde_json::from_str(&text).unwrap()
}

#[test]
fn worker_count_does_not_change_the_estimate() {
    let one = simulate("1");
    for w in ["2", "8"] {
        let other = simulate(w);
        assert_eq!(one.estimate.to_bits(), other.estimate.to_bits());
        assert_eq!(one.std_error.to_bits(), other.std_error.to_bits());
        assert_eq!(one.bias, other.bias);
    }
    assert_eq!(one.paths, 10_000);
    assert_eq!(one.seed, 5);
}

#[test]
fn simulate_writes_a_trace_and_honours_out() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("path.csv");
    let out = dir.path().join("result.json");
    let status = run(&[
        "simulate",
        "--config",
        bundled("dataset1.cfg").to_str().unwrap(),
        "--lambda",
        "8",
        "--scheme",
        "nv",
        "--paths",
        "100",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(stdout(&status).is_empty());
    let summary = String::from_utf8(status.stderr).unwrap();
    assert_eq!(summary.lines().count(), 1);
    let r: MCResult = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r.paths, 100);

    let text = std::fs::read_to_string(trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').unwrap();
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    assert_eq!(pts[0], (0.0, 1.0));
    assert_eq!(pts.last().unwrap().0, 1.0);
    assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn additive_model_matches_its_closed_form_mean() {
    let dir = tempfile::tempdir().unwrap();
    let text = dataset1_with("h = \"linear\"", "h = \"constant\"")
        .replace("x0 = 1.0", "x0 = 0.0")
        .replace("payoff = \"square\"", "payoff = \"identity\"");
    let cfg = write_config(&dir, &text);
    let text = stdout(&run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--order",
        "2",
        "--lambda",
        "4",
        "--scheme",
        "wt1",
        "--paths",
        "40000",
    ]));
    let r: MCResult = serde_json::from_str(&text).unwrap();
    // martingale jumps: E[X₁] = x₀ + γ₀
    assert!((r.estimate - r.bias.unwrap() - 0.5).abs() < 1e-12);
    assert!(r.bias.unwrap().abs() < 3.0 * r.std_error, "{r:?}");
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let status = run(&[
        "sweep",
        "--config",
        bundled("dataset1.cfg").to_str().unwrap(),
        "--lambda-grid",
        "1:4:2",
        "--paths",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("lambda,order,scheme,estimate,std_error,bias,wallclock_s,normalized_s")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 3 * 2);
    assert_eq!(rows[0][..3], ["1.0", "OA2", "wt1"]);
    assert_eq!(rows[17][..3], ["4.0", "OA4", "nv"]);
    let refs: Vec<f64> = rows
        .iter()
        .map(|r| r[3].parse::<f64>().unwrap() - r[5].parse::<f64>().unwrap())
        .collect();
    assert!(refs.iter().all(|v| (v - refs[0]).abs() < 1e-12));
}
