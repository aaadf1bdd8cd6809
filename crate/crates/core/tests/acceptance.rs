//! Acceptance criteria, one line per criterion. Runs under its own harness
//! so every line is printed; exits nonzero when a gated criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use semirecon::experiments::commands::ReconstructOutput;
use semirecon::experiments::io::{CURVE_FILE, DIAGNOSTICS_FILE, FLUX_FILE, METRICS_FILE, OBSERVATION_FILE, PHI_FILE};
use semirecon::experiments::suites::{exact_extension_error, oracle_instance, run_suite, Check};
use semirecon::experiments::{cmd_reconstruct, cmd_synthesize, ScenarioConfig};
use semirecon::forward::NonlinearityFn;
use semirecon::reconstruction::quantile;

struct Outcome {
    passed: bool,
    gated: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    let detail = checks
        .iter()
        .map(|c| format!("{} = {:.3e} ({} {:.1e})", c.name, c.value, c.relation, c.threshold))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed: checks.iter().all(|c| c.passed), gated: true, detail }
}

fn suite(name: &str) -> Outcome {
    match run_suite(name) {
        Ok(checks) => from_checks(&checks),
        Err(e) => Outcome { passed: false, gated: true, detail: format!("error: {e}") },
    }
}

/// Interval (0, 1), `T = 1`, `φ = t`, synthesized on 256 cells and 1024
/// steps, reconstructed on 64 cells and 256 steps.
fn scenario(dir: &Path, f: &str, noise: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig::from_json(&format!(
        r#"{{
        "name": "acceptance",
        "domain": {{"kind": "interval", "length": 1.0}},
        "horizon": 1.0,
        "synthesis": {{"cells": [256], "steps": 1024}},
        "reconstruction_grid": {{"cells": [64], "steps": 256}},
        "phi": {{"family": "ramp"}},
        "f": {f},
        "noise": {noise},
        "seed": {seed},
        "output_dir": {dir:?}
    }}"#
    ))
    .expect("acceptance scenario is valid")
}

const LINEAR: &str = r#"{"family": "linear", "c": 1.0}"#;
const ZERO: &str = r#"{"family": "zero"}"#;

fn run(dir: &Path, f: &str, noise: f64, seed: u64) -> semirecon::Result<ReconstructOutput> {
    let config = scenario(dir, f, noise, seed);
    cmd_synthesize(&config)?;
    cmd_reconstruct(dir, Some(&config))
}

fn criterion_6() -> semirecon::Result<Outcome> {
    let syn = oracle_instance()?;
    let mut phi: Vec<f64> = syn.observation.phi().rows().iter().flatten().copied().collect();
    phi.sort_by(f64::total_cmp);
    let band = (quantile(&phi, 0.1), quantile(&phi, 0.9));
    let e = exact_extension_error(&syn, &NonlinearityFn::linear(1.0), 16, band)?;
    Ok(Outcome {
        passed: e < 0.05,
        gated: true,
        detail: format!("relative sup error with the exact interior field = {e:.3e} (< 5.0e-2)"),
    })
}

fn criterion_7() -> semirecon::Result<Outcome> {
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let linear = run(a.path(), LINEAR, 0.0, 0)?;
    let zero = run(b.path(), ZERO, 0.0, 0)?;
    let rel = linear.metrics.as_ref().map_or(f64::INFINITY, |m| m.errors.relative_linf);
    let flux_scale = semirecon::experiments::io::read_observation(a.path())?.0.flux().max_abs();
    let curve = &zero.reconstruction.curve;
    let (lo, hi) = curve.trusted;
    let zero_sup = (0..=400)
        .map(|i| curve.eval(lo + (hi - lo) * i as f64 / 400.0).abs())
        .fold(0.0f64, f64::max)
        / flux_scale;
    Ok(Outcome {
        passed: rel < 0.10 && zero_sup < 1e-2,
        gated: true,
        detail: format!(
            "f = u: relative Linf = {rel:.3e} (< 1.0e-1) on [{lo:.3}, {hi:.3}]; f = 0: sup|f_hat| / max|flux| = {zero_sup:.3e} (< 1.0e-2)"
        ),
    })
}

fn criterion_8() -> semirecon::Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let noisy = run(dir.path(), LINEAR, 0.01, 7)?;
    let rel = noisy.metrics.as_ref().map_or(f64::INFINITY, |m| m.errors.relative_linf);
    let disc = noisy.reconstruction.diagnostics.extension_discrepancy;
    Ok(Outcome {
        passed: rel < 0.25,
        gated: false,
        detail: format!(
            "eta = 0.01: relative Linf = {rel:.3e} (target < 2.5e-1); harmonic vs normal-constant discrepancy = {}",
            disc.map_or("n/a".to_string(), |d| format!("{d:.3e}"))
        ),
    })
}

fn criterion_9() -> semirecon::Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let files = [OBSERVATION_FILE, FLUX_FILE, PHI_FILE, CURVE_FILE, DIAGNOSTICS_FILE, METRICS_FILE];
    let snapshot = || files.iter().map(|f| std::fs::read(dir.path().join(f))).collect::<std::io::Result<Vec<_>>>();
    run(dir.path(), LINEAR, 0.01, 11)?;
    let first = snapshot()?;
    run(dir.path(), LINEAR, 0.01, 11)?;
    let second = snapshot()?;
    let differing: Vec<&str> = files.iter().zip(first.iter().zip(&second)).filter(|(_, (a, b))| a != b).map(|(f, _)| *f).collect();
    Ok(Outcome {
        passed: differing.is_empty(),
        gated: true,
        detail: if differing.is_empty() {
            format!("{} output files byte-identical across two synthesize + reconstruct runs", files.len())
        } else {
            format!("differing files: {differing:?}")
        },
    })
}

fn guarded(f: fn() -> semirecon::Result<Outcome>) -> Outcome {
    f().unwrap_or_else(|e| Outcome { passed: false, gated: true, detail: format!("error: {e}") })
}

type Criterion = (u32, &'static str, u64, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "eigenbasis", 5, Box::new(|| suite("eigen"))),
        (2, "heat kernel", 30, Box::new(|| suite("kernel"))),
        (3, "representation round trip", 60, Box::new(|| suite("representation"))),
        (4, "forward solver", 120, Box::new(|| suite("forward"))),
        (5, "Volterra oracle", 30, Box::new(|| suite("volterra"))),
        (6, "exact-extension consistency", 120, Box::new(|| guarded(criterion_6))),
        (7, "end-to-end reconstruction", 300, Box::new(|| guarded(criterion_7))),
        (8, "robustness (reported)", 300, Box::new(|| guarded(criterion_8))),
        (9, "determinism", 300, Box::new(|| guarded(criterion_9))),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let status = match (outcome.gated, outcome.passed && in_time) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "REPORT (within target)",
            (false, false) => "REPORT (outside target)",
        };
        println!(
            "criterion {id} [{name}]: {status} | {} | runtime {:.1} s (budget {budget} s)",
            outcome.detail,
            elapsed.as_secs_f64()
        );
        if outcome.gated && !(outcome.passed && in_time) {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all gated criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
