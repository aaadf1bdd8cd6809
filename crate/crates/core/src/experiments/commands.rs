//! The subcommands behind the `semirecon` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{resolve_output_dir, ScenarioConfig, SCHEMA_VERSION};
use super::convergence::{levels_csv, spatial_study, temporal_study, Level, Manufactured};
use super::io::{
    curve_csv, diagnostics_manifest, read_observation, write_atomic, write_json, write_observation, ObservationFile,
    CURVE_FILE, DIAGNOSTICS_FILE, METRICS_FILE, TIMINGS_FILE,
};
use super::metrics::{curve_errors, CurveErrors};
use super::suites::{run_suite, Check};
use crate::error::{Error, Result};
use crate::observation::{reconstruction_grid, synthesize_observation};
use crate::reconstruction::{reconstruct, Reconstruction};

pub const CONVERGENCE_FILE: &str = "convergence.csv";

fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Wall-clock timings go to their own file so that every other output is
/// byte-identical across runs.
fn write_timings(dir: &Path, command: &str, stages: &[(&str, f64)]) -> Result<PathBuf> {
    let stages: serde_json::Map<String, Value> = stages.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let path = dir.join(TIMINGS_FILE);
    write_json(&path, &json!({ "schema": "semirecon.timings", "schema_version": SCHEMA_VERSION, "command": command, "seconds": stages }))?;
    Ok(path)
}

/// Loads and validates a scenario, applying a seed override.
pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Solves the forward problem and writes `observation.json`, `flux.csv`,
/// `phi.csv` and `timings.json` into the scenario's output directory.
pub fn cmd_synthesize(config: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let start = Instant::now();
    let obs = synthesize_observation(config.domain, &config.f.build(), &config.phi(), &config.synthesis_params())?;
    let solve = seconds(start);
    let dir = resolve_output_dir(config);
    let mut files = write_observation(&dir, &obs, config)?;
    files.push(write_timings(&dir, "synthesize", &[("synthesis", solve), ("total", seconds(start))])?);
    Ok(files)
}

/// Scores written next to the curve when the observation names its generator.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub generator: String,
    pub errors: CurveErrors,
    pub extension_discrepancy: Option<f64>,
    pub diagnostics: Value,
    pub config: Value,
}

#[derive(Debug)]
pub struct ReconstructOutput {
    pub files: Vec<PathBuf>,
    pub reconstruction: Reconstruction<f64>,
    pub metrics: Option<MetricsReport>,
}

/// The observation's metadata must describe the grid the scenario reconstructs on.
fn check_compatible(file: &ObservationFile, config: &ScenarioConfig) -> Result<()> {
    if file.domain != config.domain {
        return Err(Error::input("observation domain differs from the scenario's"));
    }
    if file.horizon != config.horizon || file.steps != config.reconstruction_grid.steps {
        return Err(Error::input(format!(
            "observation time grid (T = {}, {} steps) differs from the scenario's (T = {}, {} steps)",
            file.horizon, file.steps, config.horizon, config.reconstruction_grid.steps
        )));
    }
    Ok(())
}

/// Reconstructs `f` from an observation. Input errors are raised before any
/// file is written; a pipeline failure writes the partial diagnostics and
/// then returns the error.
pub fn cmd_reconstruct(observation: &Path, config: Option<&ScenarioConfig>) -> Result<ReconstructOutput> {
    let start = Instant::now();
    let (obs, file) = read_observation(observation)?;
    let config = match config {
        Some(c) => c.clone(),
        None => serde_json::from_value::<ScenarioConfig>(file.config.clone())
            .map_err(|e| Error::input(format!("observation carries no usable scenario: {e}")))?,
    };
    config.validate()?;
    check_compatible(&file, &config)?;
    reconstruction_grid(&obs, &config.reconstruction_grid.cells)?;
    let read = seconds(start);

    let dir = resolve_output_dir(&config);
    let rc = config.reconstruction_config();
    let run = Instant::now();
    let result = match reconstruct(&obs, &rc) {
        Ok(r) => r,
        Err(failure) => {
            write_json(&dir.join(DIAGNOSTICS_FILE), &diagnostics_manifest(&failure.diagnostics, &config, Some(&failure.error)))?;
            return Err(failure.error);
        }
    };
    let pipeline = seconds(run);

    let mut files = vec![dir.join(CURVE_FILE), dir.join(DIAGNOSTICS_FILE)];
    write_atomic(&files[0], &curve_csv(&result.curve, &config)?)?;
    let manifest = diagnostics_manifest(&result.diagnostics, &config, None);
    write_json(&files[1], &manifest)?;

    let metrics = match &file.generator {
        Some(selector) => {
            let f = selector.build();
            let report = MetricsReport {
                schema: "semirecon.metrics",
                schema_version: SCHEMA_VERSION,
                generator: f.label().to_string(),
                errors: curve_errors(&result.curve, &f, obs.flux().max_abs()),
                extension_discrepancy: result.diagnostics.extension_discrepancy,
                diagnostics: manifest["diagnostics"].clone(),
                config: config.to_json(),
            };
            let path = dir.join(METRICS_FILE);
            write_json(&path, &serde_json::to_value(&report)?)?;
            files.push(path);
            Some(report)
        }
        None => None,
    };
    files.push(write_timings(&dir, "reconstruct", &[("read", read), ("pipeline", pipeline), ("total", seconds(start))])?);
    Ok(ReconstructOutput { files, reconstruction: result, metrics })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn cmd_verify(suite: &str) -> Result<VerifyReport> {
    let checks = run_suite(suite)?;
    Ok(VerifyReport {
        schema: "semirecon.verify",
        schema_version: SCHEMA_VERSION,
        suite: suite.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutput {
    pub file: PathBuf,
    pub spatial: Vec<Level>,
    pub temporal: Vec<Level>,
}

/// Manufactured-solution studies for the scenario's domain, horizon and `f`.
/// The spatial study halves `h` from the reconstruction grid at 1024 steps;
/// the temporal study halves `dt` from the reconstruction step count on the
/// reconstruction grid.
pub fn cmd_convergence(config: &ScenarioConfig, levels: usize) -> Result<ConvergenceOutput> {
    config.validate()?;
    if levels < 3 {
        return Err(Error::config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let m = Manufactured::new(config.domain, config.horizon);
    let f = config.f.build();
    let base = &config.reconstruction_grid;
    let cells: Vec<Vec<usize>> = (0..levels).map(|i| base.cells.iter().map(|c| c << i).collect()).collect();
    let steps: Vec<usize> = (0..levels).map(|i| base.steps << i).collect();
    let spatial = spatial_study(&m, &f, &cells, 1024)?;
    let temporal = temporal_study(&m, &f, &base.cells, &steps)?;
    let file = resolve_output_dir(config).join(CONVERGENCE_FILE);
    let csv = levels_csv(&[("spatial", &spatial), ("temporal", &temporal)], &config.to_json().to_string());
    write_atomic(&file, csv.as_bytes())?;
    Ok(ConvergenceOutput { file, spatial, temporal })
}
