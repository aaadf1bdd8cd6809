//! File formats. CSV files start with `#` comment lines carrying the schema
//! tag and the scenario echo; floats are written with 17 significant
//! digits. Every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{FSelector, ScenarioConfig, SCHEMA_VERSION};
use crate::domain::{boundary_nodes, DomainSpec};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, TimeGrid};
use crate::observation::{ObservationMeta, ObservedData};
use crate::reconstruction::{CurveEstimate, Diagnostics};

pub const FLUX_FILE: &str = "flux.csv";
pub const PHI_FILE: &str = "phi.csv";
pub const OBSERVATION_FILE: &str = "observation.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TIMINGS_FILE: &str = "timings.json";

const TRACE_COLUMNS: [&str; 5] = ["node_id", "x", "y", "t", "value"];

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_preamble(kind: &str, config: &ScenarioConfig) -> String {
    format!("# semirecon {kind} v{SCHEMA_VERSION}\n# config {}\n", config.to_json())
}

fn csv_bytes(preamble: String, header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut out = preamble.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn trace_rows(trace: &BoundaryTrace<f64>) -> Vec<Vec<String>> {
    let time = trace.time_grid();
    let mut rows = Vec::with_capacity(time.len() * trace.nodes().len());
    for j in 0..time.len() {
        let t = time.time(j);
        for (b, node) in trace.nodes().nodes().iter().enumerate() {
            rows.push(vec![
                b.to_string(),
                fmt_float(node.point.x),
                fmt_float(node.point.y),
                fmt_float(t),
                fmt_float(trace.at(j, b)),
            ]);
        }
    }
    rows
}

/// Metadata stored next to an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFile {
    pub schema_version: u32,
    pub kind: String,
    pub domain: DomainSpec<f64>,
    pub horizon: f64,
    pub steps: usize,
    /// Boundary nodes per side (rectangle) or the reconstruction cell count.
    pub per_side: usize,
    pub node_count: usize,
    pub fine_cells: Vec<usize>,
    pub fine_steps: usize,
    pub noise: f64,
    pub seed: u64,
    /// Generator of synthetic data, for scoring only.
    pub generator: Option<FSelector>,
    pub generator_label: Option<String>,
    pub config: Value,
}

/// Writes `observation.json`, `flux.csv` and `phi.csv` into `dir`.
pub fn write_observation(dir: &Path, obs: &ObservedData<f64>, config: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let meta = obs.meta();
    let file = ObservationFile {
        schema_version: SCHEMA_VERSION,
        kind: "observation".into(),
        domain: *obs.domain(),
        horizon: obs.time_grid().horizon,
        steps: obs.time_grid().steps,
        per_side: obs.flux().nodes().per_side(),
        node_count: obs.flux().nodes().len(),
        fine_cells: meta.fine_cells.clone(),
        fine_steps: meta.fine_steps,
        noise: obs.noise(),
        seed: meta.seed,
        generator: Some(config.f),
        generator_label: meta.generator.clone(),
        config: config.to_json(),
    };
    let flux = csv_bytes(csv_preamble("flux", config), &TRACE_COLUMNS, trace_rows(obs.flux()))?;
    let phi = csv_bytes(csv_preamble("phi", config), &TRACE_COLUMNS, trace_rows(obs.phi()))?;
    let paths = [dir.join(OBSERVATION_FILE), dir.join(FLUX_FILE), dir.join(PHI_FILE)];
    write_json(&paths[0], &serde_json::to_value(&file)?)?;
    write_atomic(&paths[1], &flux)?;
    write_atomic(&paths[2], &phi)?;
    Ok(paths.to_vec())
}

/// Accepts the observation directory or its `observation.json`.
pub fn observation_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn read_trace(path: &Path, file: &ObservationFile, expected: &BoundaryTrace<f64>) -> Result<BoundaryTrace<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::input(format!("{} has no {name:?} column", path.display())))
    };
    let cols: Vec<usize> = TRACE_COLUMNS.iter().map(|c| column(c)).collect::<Result<_>>()?;
    let time = expected.time_grid();
    let nodes = expected.nodes();
    let mut values = vec![vec![0.0; nodes.len()]; time.len()];
    let mut count = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record.get(cols[i]).ok_or_else(|| Error::input(format!("{}: short row {}", path.display(), row + 1)))
        };
        let parse = |i: usize| -> Result<f64> {
            field(i)?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::input(format!("{}: row {}: {e}", path.display(), row + 1)))
        };
        let b: usize = field(0)?
            .trim()
            .parse()
            .map_err(|e| Error::input(format!("{}: row {}: node id: {e}", path.display(), row + 1)))?;
        let (j, expected_b) = (row / nodes.len(), row % nodes.len());
        if j >= time.len() || b != expected_b {
            return Err(Error::input(format!("{}: row {} out of order", path.display(), row + 1)));
        }
        let node = &nodes.nodes()[b];
        let tol = 1e-12 * (1.0 + file.horizon);
        if (parse(1)? - node.point.x).abs() > tol || (parse(2)? - node.point.y).abs() > tol {
            return Err(Error::input(format!("{}: row {} node coordinates do not match", path.display(), row + 1)));
        }
        if (parse(3)? - time.time(j)).abs() > tol {
            return Err(Error::input(format!("{}: row {} time does not match the grid", path.display(), row + 1)));
        }
        let v = parse(4)?;
        if !v.is_finite() {
            return Err(Error::input(format!("{}: row {} value is not finite", path.display(), row + 1)));
        }
        values[j][b] = v;
        count += 1;
    }
    if count != time.len() * nodes.len() {
        return Err(Error::input(format!(
            "{}: expected {} rows, found {count}",
            path.display(),
            time.len() * nodes.len()
        )));
    }
    BoundaryTrace::new(nodes.clone(), *time, values)
}

/// Reads and validates an observation written by [`write_observation`].
pub fn read_observation(path: &Path) -> Result<(ObservedData<f64>, ObservationFile)> {
    let dir = observation_dir(path);
    let meta_path = dir.join(OBSERVATION_FILE);
    let text = std::fs::read_to_string(&meta_path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", meta_path.display())))?;
    let file: ObservationFile =
        serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", meta_path.display())))?;
    if file.schema_version != SCHEMA_VERSION || file.kind != "observation" {
        return Err(Error::input(format!(
            "{}: expected observation schema v{SCHEMA_VERSION}, found {} v{}",
            meta_path.display(),
            file.kind,
            file.schema_version
        )));
    }
    let nodes = boundary_nodes(file.domain, file.per_side)?;
    if nodes.len() != file.node_count {
        return Err(Error::input("node count in metadata does not match the domain"));
    }
    let time = TimeGrid::new(file.horizon, file.steps)?;
    let template = BoundaryTrace::zeros(nodes, time);
    let flux = read_trace(&dir.join(FLUX_FILE), &file, &template)?;
    let phi = read_trace(&dir.join(PHI_FILE), &file, &template)?;
    let meta = ObservationMeta {
        fine_cells: file.fine_cells.clone(),
        fine_steps: file.fine_steps,
        seed: file.seed,
        generator: file.generator_label.clone(),
    };
    let obs = ObservedData::new(phi, flux, file.noise, meta)?;
    Ok((obs, file))
}

pub fn curve_csv(curve: &CurveEstimate<f64>, config: &ScenarioConfig) -> Result<Vec<u8>> {
    let rows = (0..curve.knots.len())
        .map(|i| {
            vec![
                fmt_float(curve.knots[i]),
                fmt_float(curve.values[i]),
                curve.counts[i].to_string(),
                fmt_float(curve.spreads[i]),
            ]
        })
        .collect();
    csv_bytes(csv_preamble("curve", config), &["knot_phi", "f_hat", "sample_count", "spread"], rows)
}

pub fn diagnostics_json(d: &Diagnostics<f64>) -> Value {
    json!({
        "flux_difference_max": d.flux_difference_max,
        "a_min": d.a_range.map(|r| r.0),
        "a_max": d.a_range.map(|r| r.1),
        "a_initial_residual": d.a_initial,
        "coefficient_initial_residual": d.coefficient_initial,
        "mode_energies": d.mode_energies,
        "tail_energy_fraction": d.tail_energy_fraction,
        "under_resolved": d.under_resolved,
        "dropped_bins": d.dropped_bins,
        "trusted_range": d.trusted_range.map(|r| [r.0, r.1]),
        "extension_discrepancy": d.extension_discrepancy,
        "failed_stage": d.failed_stage,
    })
}

/// The diagnostics manifest with schema tag and scenario echo.
pub fn diagnostics_manifest(d: &Diagnostics<f64>, config: &ScenarioConfig, error: Option<&Error>) -> Value {
    json!({
        "schema": "semirecon.diagnostics",
        "schema_version": SCHEMA_VERSION,
        "status": if error.is_some() { "failed" } else { "ok" },
        "error": error.map(|e| e.to_string()),
        "diagnostics": diagnostics_json(d),
        "config": config.to_json(),
    })
}
