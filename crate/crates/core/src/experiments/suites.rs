//! Invariant suites run by `semirecon verify`.

use serde::Serialize;

use crate::domain::{build_grid, DomainSpec, Point};
use crate::eigen::{laplacian_residual, verify_orthonormality, EigenBasis};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, SpaceTimeField};
use crate::forward::{neumann_trace, solve_linear_heat, solve_semilinear, DirichletData, NonlinearityFn};
use crate::kernel::{KernelConfig, KernelEvaluator};
use crate::observation::{synthesize, SynthesisParams};
use crate::reconstruction::{assemble_on_nodes, differentiate_coefficients, oracle_volterra, project_coefficients};

use super::convergence::{spatial_study, temporal_study, w_residual_study, Manufactured};

pub const SUITES: [&str; 6] = ["eigen", "kernel", "representation", "forward", "volterra", "extension"];

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<"` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn below(suite: &str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { suite: suite.into(), name: name.into(), value, threshold, relation: "<", passed: value < threshold }
    }

    pub fn at_least(suite: &str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { suite: suite.into(), name: name.into(), value, threshold, relation: ">=", passed: value >= threshold }
    }
}

pub fn run_suite(name: &str) -> Result<Vec<Check>> {
    match name {
        "eigen" => eigen_suite(),
        "kernel" => kernel_suite(),
        "representation" => representation_suite(),
        "forward" => forward_suite(),
        "volterra" => volterra_suite(),
        "extension" => extension_suite(),
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s)?);
            }
            Ok(all)
        }
        other => Err(Error::config(format!("unknown suite {other:?}; expected one of {SUITES:?} or \"all\""))),
    }
}

fn unit() -> DomainSpec<f64> {
    DomainSpec::Interval { length: 1.0 }
}

/// Smallest of the successive `log2` error ratios.
pub fn min_rate(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn eigen_suite() -> Result<Vec<Check>> {
    let basis = EigenBasis::new(unit(), 16)?;
    let report = verify_orthonormality(&basis, &build_grid(unit(), &[512])?)?;
    let residuals = [64, 128, 256]
        .iter()
        .map(|&n| Ok(laplacian_residual(&basis, &build_grid(unit(), &[n])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Check::below("eigen", "orthonormality deviation (K=16, n=512)", report.max_deviation, 1e-6),
        Check::at_least("eigen", "eigen-residual rate under h-halving", min_rate(&residuals), 1.9),
    ])
}

fn kernel_suite() -> Result<Vec<Check>> {
    let kernel = KernelEvaluator::new(unit(), KernelConfig::default())?;
    let grid = build_grid(unit(), &[2048])?;
    let mut mass = 0.0f64;
    for tau in [1e-3, 3e-3, 1e-2, 0.1, 1.0, 10.0] {
        for x in [0.0, 0.1, 0.5, 1.0] {
            mass = mass.max((kernel.mass(&grid, Point::on_line(x), tau)? - 1.0).abs());
        }
    }
    let eps = kernel.crossover();
    let mut branch = 0.0f64;
    for f in [0.5, 0.75, 1.0, 1.5, 2.0] {
        for (x, y) in [(0.0, 0.0), (0.0, 1.0), (0.3, 0.35), (1.0, 1.0)] {
            let (x, y) = (Point::on_line(x), Point::on_line(y));
            branch = branch.max((kernel.spectral_value(x, y, eps * f) - kernel.image_value(x, y, eps * f)).abs());
        }
    }
    let mut semigroup = 0.0f64;
    for (t1, t2) in [(0.01, 0.02), (0.05, 0.1), (0.3, 0.2)] {
        for (x, z) in [(0.0, 0.0), (0.2, 0.7), (1.0, 0.9)] {
            let (x, z) = (Point::on_line(x), Point::on_line(z));
            let lhs: f64 = grid
                .nodes()
                .zip(grid.weights())
                .map(|(y, &w)| w * kernel.value(x, y, t1).unwrap_or(0.0) * kernel.value(y, z, t2).unwrap_or(0.0))
                .sum();
            semigroup = semigroup.max((lhs - kernel.value(x, z, t1 + t2)?).abs());
        }
    }
    Ok(vec![
        Check::below("kernel", "mass deviation, tau in [1e-3, 10]", mass, 1e-6),
        Check::below("kernel", "spectral/images agreement in [eps/2, 2 eps]", branch, 1e-8),
        Check::below("kernel", "semigroup identity", semigroup, 1e-5),
    ])
}

/// `max |∫∫ U ∂_ν v_φ - φ| / max |φ|` on the boundary nodes.
pub fn representation_error(phi: &DirichletData<f64>, n: usize, steps: usize) -> Result<f64> {
    let grid = build_grid(unit(), &[n])?;
    let v = solve_linear_heat(&grid, phi, steps)?;
    let flux = neumann_trace(&v)?;
    let kernel = KernelEvaluator::new(unit(), KernelConfig::default())?;
    let back = kernel.boundary_propagate_trace(&flux, flux.nodes())?;
    let exact = BoundaryTrace::from_fn(flux.nodes().clone(), *flux.time_grid(), |p, t| phi.value(p, t));
    let err = back.zip_with(&exact, |a, b| a - b)?.max_abs();
    Ok(err / exact.max_abs())
}

pub fn representation_families() -> Vec<(&'static str, DirichletData<f64>)> {
    vec![
        ("t(1+x)", DirichletData::new(1.0, |p: Point<f64>, t| t * (1.0 + p.x))),
        ("(1-exp(-3t))(1+cos(pi x)/2)", DirichletData::new(1.0, |p: Point<f64>, t: f64| {
            (1.0 - (-3.0 * t).exp()) * (1.0 + 0.5 * (std::f64::consts::PI * p.x).cos())
        })),
    ]
}

fn representation_suite() -> Result<Vec<Check>> {
    representation_families()
        .into_iter()
        .map(|(name, phi)| {
            let e = representation_error(&phi, 512, 2048)?;
            Ok(Check::below("representation", format!("round trip of phi = {name}"), e, 0.02))
        })
        .collect()
}

fn forward_suite() -> Result<Vec<Check>> {
    let f = NonlinearityFn::linear(1.0);
    let m = Manufactured::new(unit(), 1.0);
    let spatial = spatial_study(&m, &f, &[vec![16], vec![32], vec![64]], 1024)?;
    let temporal = temporal_study(&m, &f, &[64], &[16, 32, 64, 128])?;
    let w = w_residual_study(&[(32, 128), (64, 256), (128, 512)])?;
    let spatial_errors: Vec<f64> = spatial.iter().map(|r| r.error).collect();
    let temporal_errors: Vec<f64> = temporal.iter().map(|r| r.error).collect();
    let w_full: Vec<f64> = w.iter().map(|r| r.0).collect();
    let w_late: Vec<f64> = w.iter().map(|r| r.1).collect();
    Ok(vec![
        Check::at_least("forward", "manufactured spatial rate", min_rate(&spatial_errors), 1.9),
        Check::at_least("forward", "manufactured temporal rate", min_rate(&temporal_errors), 1.9),
        Check::below("forward", "w-problem residual (n=128, N_t=512)", w_full[2], 1e-2),
        Check::at_least("forward", "w-problem residual rate (t > 0.1)", min_rate(&w_late), 1.9),
    ])
}

/// The smooth ground-truth instance shared by the oracle suites:
/// `f(u) = u`, `φ = t` on the unit interval.
pub fn oracle_instance() -> Result<crate::observation::Synthesis<f64>> {
    let params = SynthesisParams { fine_cells: vec![128], fine_steps: 512, coarse_cells: vec![64], coarse_steps: 256, noise: 0.0, seed: 0 };
    synthesize(unit(), &NonlinearityFn::linear(1.0), &DirichletData::new(1.0, |_, t| t), &params)
}

/// `max_{k ≤ 8} max_j |c_k - (p'_k + λ_k p_k)| / max |c_k|`.
pub fn volterra_error(u_f: &SpaceTimeField<f64>, f: &NonlinearityFn<f64>) -> Result<f64> {
    let basis = EigenBasis::new(unit(), 16)?;
    let oracle = oracle_volterra(u_f, f, &basis, 8)?;
    let c = differentiate_coefficients(&oracle.series, 2, 2)?.volterra_sources()?;
    let mut worst = 0.0f64;
    for (computed, exact) in c.iter().zip(&oracle.sources) {
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = computed.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if scale > 0.0 {
            worst = worst.max(err / scale);
        }
    }
    Ok(worst)
}

/// `f(u) = u`, `φ = t(1 + x)` solved on `n = 128` with 512 steps.
pub fn volterra_instance() -> Result<SpaceTimeField<f64>> {
    let grid = build_grid(unit(), &[128])?;
    let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * (1.0 + p.x));
    solve_semilinear(&grid, &NonlinearityFn::linear(1.0), &phi, 512, None)
}

fn volterra_suite() -> Result<Vec<Check>> {
    let e = volterra_error(&volterra_instance()?, &NonlinearityFn::linear(1.0))?;
    Ok(vec![Check::below("volterra", "Volterra inversion residual, k <= 8", e, 1e-2)])
}

/// Relative sup-norm error of the series `F` built from the oracle interior
/// field in place of the extension, on times whose `φ` lies in the band.
pub fn exact_extension_error(
    syn: &crate::observation::Synthesis<f64>,
    f: &NonlinearityFn<f64>,
    modes: usize,
    band: (f64, f64),
) -> Result<f64> {
    let obs = &syn.observation;
    let domain = *obs.domain();
    let kernel = KernelEvaluator::new(domain, KernelConfig::default())?;
    let potential = kernel.domain_potential(&syn.solution.map(|u| f.value(u)))?;
    let time = *obs.time_grid();
    let stride = potential
        .time_grid()
        .subsample_stride(&time)
        .ok_or_else(|| Error::input("fine and observation time grids are incompatible"))?;
    let cells: Vec<usize> = (0..domain.dim()).map(|a| obs.phi().nodes().per_side().max(syn.solution.grid().cells(a) / 2)).collect();
    let grid = build_grid(domain, &cells)?;
    let on_grid = potential.on_grid(&grid);
    let snapshots = (0..time.len()).map(|j| on_grid.snapshot(j * stride).to_vec()).collect();
    let interior = SpaceTimeField::from_snapshots(grid, time, snapshots)?;
    let series = differentiate_coefficients(&project_coefficients(&interior, kernel.basis(), modes)?, 2, 2)?;
    let assembled = assemble_on_nodes(&series, kernel.basis(), obs.phi().nodes())?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for j in 0..time.len() {
        for b in 0..obs.phi().nodes().len() {
            let p = obs.phi().at(j, b);
            if p < band.0 || p > band.1 {
                continue;
            }
            let exact = f.value(p);
            err = err.max((assembled.at(j, b) - exact).abs());
            scale = scale.max(exact.abs());
        }
    }
    Ok(err / scale.max(f64::MIN_POSITIVE))
}

fn extension_suite() -> Result<Vec<Check>> {
    let syn = oracle_instance()?;
    let mut phi: Vec<f64> = syn.observation.phi().rows().iter().flatten().copied().collect();
    phi.sort_by(f64::total_cmp);
    let band = (crate::reconstruction::quantile(&phi, 0.1), crate::reconstruction::quantile(&phi, 0.9));
    let e = exact_extension_error(&syn, &NonlinearityFn::linear(1.0), 16, band)?;
    Ok(vec![Check::below("extension", "series with exact interior field, K=16", e, 0.05)])
}
