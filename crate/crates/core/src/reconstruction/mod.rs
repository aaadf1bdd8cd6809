//! Recovery of `f` from an observation.
//!
//! The stages are: flux difference `g = ∂_ν u_f - ∂_ν v_φ`, the boundary
//! functional `a = ∫∫ U g`, an extension `ã` of `a` into the domain, its
//! modal coefficients `a_k(t)`, their time derivatives, the boundary series
//! `F = Σ (a'_k + λ_k a_k) ω_k`, and finally the monotone curve through the
//! graph `(φ, F)`. Everything before the curve is linear in `g`.

mod curve;
mod extension;
mod series;

use std::fmt;

pub use curve::{build_curve, evaluate_curve, pool_adjacent_violators, quantile, CurveConfig, CurveEstimate, CurveValue};
pub use extension::{extend_a, ExtensionMethod};
pub use series::{
    assemble_at_node, assemble_series, differentiate_coefficients, oracle_volterra, project_coefficients,
    savitzky_golay_derivative, CoefficientSeries, VolterraOracle,
};

use crate::domain::{BoundaryNodeSet, DomainSpec, SpatialGrid};
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, SpaceTimeField};
use crate::forward::{neumann_trace_on, solve_linear_heat, DirichletData};
use crate::kernel::{KernelConfig, KernelEvaluator};
use crate::observation::{reconstruction_grid, ObservedData};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig<T> {
    /// Series truncation `K`.
    pub modes: usize,
    pub extension: ExtensionMethod,
    /// Half-width `w` of the differentiation window.
    pub window: usize,
    /// Degree of the local fit; only 2 is supported.
    pub degree: usize,
    pub kernel: KernelConfig<T>,
    pub curve: CurveConfig<T>,
    /// Cells per axis of the grid used for `v_φ` and the extension.
    pub grid_cells: Vec<usize>,
    /// Also run the other extension method and report the discrepancy.
    pub compare_extensions: bool,
}

impl<T: Real> ReconstructionConfig<T> {
    /// Defaults: `K = 16` on the interval and 32 on the rectangle, `w = 2`,
    /// 32 bins, monotone projection, trusted band `[0.1, 0.9]`.
    pub fn for_domain(domain: &DomainSpec<T>, grid_cells: Vec<usize>) -> Self {
        let modes = if domain.dim() == 1 { 16 } else { 32 };
        ReconstructionConfig {
            modes,
            extension: ExtensionMethod::Harmonic,
            window: 2,
            degree: 2,
            kernel: KernelConfig::default(),
            curve: CurveConfig { bins: 32, monotone: true, quantiles: (T::lit(0.1), T::lit(0.9)) },
            grid_cells,
            compare_extensions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::config("mode count K must be at least 1"));
        }
        if self.modes > self.kernel.k_max {
            return Err(Error::config(format!("K = {} exceeds the kernel's k_max = {}", self.modes, self.kernel.k_max)));
        }
        if self.degree != 2 {
            return Err(Error::config(format!("only quadratic local fits are supported, got degree {}", self.degree)));
        }
        if self.window == 0 {
            return Err(Error::config("differentiation half-width must be at least 1"));
        }
        self.curve.validate()
    }
}

/// Per-stage diagnostics. Fields stay `None` for stages that did not run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics<T> {
    pub flux_difference_max: Option<T>,
    /// Smallest and largest value of `a`; `a` should be nonnegative.
    pub a_range: Option<(T, T)>,
    pub a_initial: Option<T>,
    /// `max_k |a_k(0)|`.
    pub coefficient_initial: Option<T>,
    pub mode_energies: Option<Vec<T>>,
    /// Share of the energy carried by modes `k > K/2`.
    pub tail_energy_fraction: Option<T>,
    pub under_resolved: Option<bool>,
    pub dropped_bins: Option<usize>,
    pub trusted_range: Option<(T, T)>,
    /// `max |f̂_harmonic - f̂_normal_constant|` over the trusted range.
    pub extension_discrepancy: Option<T>,
    pub failed_stage: Option<String>,
}

/// Error with whatever diagnostics were gathered before it.
#[derive(Debug)]
pub struct ReconstructionFailure<T> {
    pub error: Error,
    pub diagnostics: Diagnostics<T>,
}

impl<T> fmt::Display for ReconstructionFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T> From<ReconstructionFailure<T>> for Error {
    fn from(f: ReconstructionFailure<T>) -> Self {
        f.error
    }
}

/// Outputs of the linear stages.
#[derive(Debug, Clone)]
pub struct LinearStages<T> {
    pub a: BoundaryTrace<T>,
    pub extended: SpaceTimeField<T>,
    pub series: CoefficientSeries<T>,
    /// `F(x_b, t_j)` on the nodes of `a`.
    pub assembled: BoundaryTrace<T>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction<T> {
    pub curve: CurveEstimate<T>,
    pub stages: LinearStages<T>,
    pub flux_difference: BoundaryTrace<T>,
    pub diagnostics: Diagnostics<T>,
}

/// `g = ∂_ν u_f - ∂_ν v_φ`, with `v_φ` solved on `grid` from the observed
/// `φ` (linear in time between samples) on the observation's time grid.
pub fn flux_difference<T: Real>(obs: &ObservedData<T>, grid: &SpatialGrid<T>) -> Result<BoundaryTrace<T>> {
    if grid.domain() != obs.domain() {
        return Err(Error::input("grid and observation live on different domains"));
    }
    let phi = DirichletData::from_trace(obs.phi().clone());
    let v = solve_linear_heat(grid, &phi, obs.time_grid().steps)?;
    let reference = neumann_trace_on(&v, obs.flux().nodes())?;
    obs.flux().zip_with(&reference, |a, b| a - b)
}

/// `a(x_b, t_j) = ∫_0^{t_j} ∫_∂Ω U(x_b, t_j; y, s) g(y, s) dS ds`.
pub fn compute_a<T: Real>(g: &BoundaryTrace<T>, kernel: &KernelEvaluator<T>, nodes: &BoundaryNodeSet<T>) -> Result<BoundaryTrace<T>> {
    kernel.boundary_propagate_trace(g, nodes)
}

/// Evaluates the boundary series at every node of `nodes` and time node of
/// `series`.
pub fn assemble_on_nodes<T: Real>(
    series: &CoefficientSeries<T>,
    basis: &EigenBasis<T>,
    nodes: &BoundaryNodeSet<T>,
) -> Result<BoundaryTrace<T>> {
    let sources = series.volterra_sources()?;
    let k = series.mode_count();
    let samples: Vec<Vec<T>> = nodes.nodes().iter().map(|n| (0..k).map(|m| basis.modes()[m].eval(n.point)).collect()).collect();
    let time = *series.time_grid();
    let values = (0..time.len())
        .map(|j| samples.iter().map(|w| w.iter().zip(&sources).map(|(&wm, c)| wm * c[j]).sum()).collect())
        .collect();
    BoundaryTrace::new(nodes.clone(), time, values)
}

/// Extension, projection, differentiation and assembly for a given `a`.
pub fn series_stages<T: Real>(
    a: &BoundaryTrace<T>,
    basis: &EigenBasis<T>,
    grid: &SpatialGrid<T>,
    method: ExtensionMethod,
    config: &ReconstructionConfig<T>,
) -> Result<LinearStages<T>> {
    let extended = extend_a(a, method, grid)?;
    let projected = project_coefficients(&extended, basis, config.modes)?;
    let series = differentiate_coefficients(&projected, config.window, config.degree)?;
    let assembled = assemble_on_nodes(&series, basis, a.nodes())?;
    Ok(LinearStages { a: a.clone(), extended, series, assembled })
}

/// Every stage from `g` up to the boundary series.
pub fn linear_stages<T: Real>(
    g: &BoundaryTrace<T>,
    kernel: &KernelEvaluator<T>,
    grid: &SpatialGrid<T>,
    config: &ReconstructionConfig<T>,
) -> Result<LinearStages<T>> {
    let a = compute_a(g, kernel, g.nodes())?;
    series_stages(&a, kernel.basis(), grid, config.extension, config)
}

fn flatten<T: Real>(trace: &BoundaryTrace<T>) -> Vec<T> {
    trace.rows().iter().flatten().copied().collect()
}

/// Largest gap between two curves on 201 points of `[lo, hi]`.
pub fn curve_discrepancy<T: Real>(a: &CurveEstimate<T>, b: &CurveEstimate<T>, range: (T, T)) -> T {
    let n = 200;
    (0..=n)
        .map(|i| {
            let u = range.0 + (range.1 - range.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            (a.eval(u) - b.eval(u)).abs()
        })
        .fold(T::zero(), |m, v| m.max(v))
}

/// Runs the whole pipeline.
pub fn reconstruct<T: Real>(
    obs: &ObservedData<T>,
    config: &ReconstructionConfig<T>,
) -> std::result::Result<Reconstruction<T>, ReconstructionFailure<T>> {
    let mut diag = Diagnostics::default();
    macro_rules! stage {
        ($name:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    diag.failed_stage = Some($name.to_string());
                    return Err(ReconstructionFailure { error, diagnostics: diag });
                }
            }
        };
    }
    stage!("config", config.validate());
    let grid = stage!("grid", reconstruction_grid(obs, &config.grid_cells));
    let kernel = stage!("kernel", KernelEvaluator::new(*obs.domain(), config.kernel));

    let g = stage!("flux_difference", flux_difference(obs, &grid));
    diag.flux_difference_max = Some(g.max_abs());

    let a = stage!("compute_a", compute_a(&g, &kernel, g.nodes()));
    let values = flatten(&a);
    let a_min = values.iter().fold(T::infinity(), |m, &v| m.min(v));
    let a_max = values.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    diag.a_range = Some((a_min, a_max));
    diag.a_initial = Some(a.row(0).iter().fold(T::zero(), |m, v| m.max(v.abs())));

    let stages = stage!("series", series_stages(&a, kernel.basis(), &grid, config.extension, config));
    let series = &stages.series;
    diag.coefficient_initial =
        Some((1..=series.mode_count()).map(|k| series.values(k)[0].abs()).fold(T::zero(), |m, v| m.max(v)));
    let energies = series.mode_energies();
    let total: T = energies.iter().copied().sum();
    let tail: T = energies[series.mode_count() / 2..].iter().copied().sum();
    diag.tail_energy_fraction = Some(if total > T::zero() { tail / total } else { T::zero() });
    diag.mode_energies = Some(energies);
    diag.under_resolved = Some(series.under_resolved());

    let phi = flatten(obs.phi());
    let curve = stage!("build_curve", build_curve(&phi, &flatten(&stages.assembled), &config.curve));
    diag.dropped_bins = Some(curve.dropped_bins);
    diag.trusted_range = Some(curve.trusted);
    if config.curve.monotone && !(curve.is_nondecreasing() && curve.values[0] == T::zero()) {
        diag.failed_stage = Some("build_curve".into());
        return Err(ReconstructionFailure {
            error: Error::Reconstruction("monotone projection produced a decreasing curve".into()),
            diagnostics: diag,
        });
    }

    if config.compare_extensions {
        let other = stage!("compare_extensions", series_stages(&a, kernel.basis(), &grid, config.extension.other(), config));
        let other_curve = stage!("compare_extensions", build_curve(&phi, &flatten(&other.assembled), &config.curve));
        diag.extension_discrepancy = Some(curve_discrepancy(&curve, &other_curve, curve.trusted));
    }

    Ok(Reconstruction { curve, stages, flux_difference: g, diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, Point};
    use crate::field::TimeGrid;
    use crate::forward::{grid_boundary_nodes, NonlinearityFn};
    use crate::observation::{synthesize, SynthesisParams};

    fn interval() -> DomainSpec<f64> {
        DomainSpec::interval(1.0).unwrap()
    }

    fn params(noise: f64) -> SynthesisParams<f64> {
        SynthesisParams { fine_cells: vec![128], fine_steps: 512, coarse_cells: vec![64], coarse_steps: 256, noise, seed: 3 }
    }

    #[test]
    fn config_validation() {
        let mut c = ReconstructionConfig::<f64>::for_domain(&interval(), vec![64]);
        assert!(c.validate().is_ok());
        c.modes = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ReconstructionConfig::<f64>::for_domain(&interval(), vec![64]);
        c.curve.bins = 7;
        assert!(c.validate().is_err());
        let mut c = ReconstructionConfig::<f64>::for_domain(&interval(), vec![64]);
        c.degree = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_flux_difference_gives_zero_a() {
        let kernel = KernelEvaluator::new(interval(), KernelConfig::default()).unwrap();
        let nodes = crate::domain::boundary_nodes(interval(), 0).unwrap();
        let g = BoundaryTrace::zeros(nodes.clone(), TimeGrid::new(1.0, 32).unwrap());
        let a = compute_a(&g, &kernel, &nodes).unwrap();
        assert_eq!(a.max_abs(), 0.0);
    }

    #[test]
    fn zero_f_flux_difference_is_small() {
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let syn = synthesize(interval(), &NonlinearityFn::zero(), &phi, &params(0.0)).unwrap();
        let grid = build_grid(interval(), &[64]).unwrap();
        let g = flux_difference(&syn.observation, &grid).unwrap();
        let scale = syn.observation.flux().max_abs();
        assert!(g.row(0).iter().all(|v| v.abs() < 1e-12));
        // away from the t = 0 layer the two discretizations agree closely
        for j in g.time_grid().len() / 10..g.time_grid().len() {
            assert!(g.row(j).iter().all(|v| v.abs() < 1e-3 * scale), "{j}");
        }
    }

    #[test]
    fn linear_stages_are_linear() {
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let syn = synthesize(interval(), &NonlinearityFn::linear(1.0), &phi, &params(0.0)).unwrap();
        let grid = build_grid(interval(), &[64]).unwrap();
        let config = ReconstructionConfig::for_domain(&interval(), vec![64]);
        let kernel = KernelEvaluator::new(interval(), config.kernel).unwrap();
        let g = flux_difference(&syn.observation, &grid).unwrap();
        let one = linear_stages(&g, &kernel, &grid, &config).unwrap();
        let two = linear_stages(&g.map(|v| 2.0 * v), &kernel, &grid, &config).unwrap();
        let close = |a: &[f64], b: &[f64]| {
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            a.iter().zip(b).all(|(x, y)| (2.0 * x - y).abs() <= 1e-12 * scale)
        };
        assert!(close(&flatten(&one.a), &flatten(&two.a)));
        assert!(close(&flatten(&one.assembled), &flatten(&two.assembled)));
        for k in 1..=config.modes {
            assert!(close(one.series.values(k), two.series.values(k)));
            assert!(close(one.series.derivatives(k).unwrap(), two.series.derivatives(k).unwrap()));
        }
    }

    #[test]
    fn a_vanishes_initially_and_matches_interior_oracle() {
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let f = NonlinearityFn::linear(1.0);
        let syn = synthesize(interval(), &f, &phi, &params(0.0)).unwrap();
        let config = ReconstructionConfig::for_domain(&interval(), vec![64]);
        let rec = reconstruct(&syn.observation, &config).unwrap();
        let d = &rec.diagnostics;
        assert!(d.a_initial.unwrap() < 1e-8);
        assert!(d.coefficient_initial.unwrap() < 1e-8);
        let (a_min, a_max) = d.a_range.unwrap();
        assert!(a_min > -0.01 * a_max, "{a_min} {a_max}");
        // a = ∫∫ U f(u_f) on the boundary
        let kernel = KernelEvaluator::new(interval(), config.kernel).unwrap();
        let oracle = kernel.domain_potential(&syn.solution.map(|u| f.value(u))).unwrap();
        let nodes = grid_boundary_nodes(&build_grid(interval(), &[64]).unwrap()).unwrap();
        let a = &rec.stages.a;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for j in 0..a.time_grid().len() {
            let t = a.time_grid().time(j);
            for (b, n) in nodes.nodes().iter().enumerate() {
                let i = oracle.eval(n.point, t).unwrap();
                err = err.max((a.at(j, b) - i).abs());
                scale = scale.max(i.abs());
            }
        }
        assert!(err < 0.02 * scale, "{err} vs {scale}");
    }

    #[test]
    fn reconstruction_is_monotone_and_anchored() {
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let syn = synthesize(interval(), &NonlinearityFn::power(2.0), &phi, &params(0.0)).unwrap();
        let mut config = ReconstructionConfig::for_domain(&interval(), vec![64]);
        config.compare_extensions = true;
        let rec = reconstruct(&syn.observation, &config).unwrap();
        assert!(rec.curve.is_nondecreasing());
        assert_eq!(rec.curve.eval(0.0), 0.0);
        assert!(rec.diagnostics.extension_discrepancy.is_some());
    }

    #[test]
    fn failure_carries_partial_diagnostics() {
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let syn = synthesize(interval(), &NonlinearityFn::linear(1.0), &phi, &params(0.0)).unwrap();
        let mut config = ReconstructionConfig::for_domain(&interval(), vec![64]);
        config.window = 400;
        let err = reconstruct(&syn.observation, &config).unwrap_err();
        assert_eq!(err.diagnostics.failed_stage.as_deref(), Some("series"));
        assert!(err.diagnostics.a_range.is_some());
        assert!(matches!(err.error, Error::Config(_)));
    }
}
