//! Boundary measurements: the Dirichlet data `φ` and the flux `∂_ν u_f`
//! sampled on the reconstruction's boundary nodes and time grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{build_grid, DomainSpec, SpatialGrid};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, TimeGrid};
use crate::forward::{grid_boundary_nodes, neumann_trace, solve_semilinear, DirichletData, NonlinearityFn, SolutionField};
use crate::scalar::Real;

/// Bookkeeping that travels with an observation. `generator` names the `f`
/// that produced synthetic data; it is for scoring only and is never read
/// by the reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMeta {
    pub fine_cells: Vec<usize>,
    pub fine_steps: usize,
    pub seed: u64,
    pub generator: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData<T> {
    phi: BoundaryTrace<T>,
    flux: BoundaryTrace<T>,
    noise: T,
    meta: ObservationMeta,
}

impl<T: Real> ObservedData<T> {
    pub fn new(phi: BoundaryTrace<T>, flux: BoundaryTrace<T>, noise: T, meta: ObservationMeta) -> Result<Self> {
        if !phi.shares_layout(&flux) {
            return Err(Error::input("φ and flux traces must share node set and time grid"));
        }
        if !(noise >= T::zero()) {
            return Err(Error::input(format!("noise level must be nonnegative, got {noise}")));
        }
        Ok(ObservedData { phi, flux, noise, meta })
    }

    pub fn phi(&self) -> &BoundaryTrace<T> {
        &self.phi
    }

    pub fn flux(&self) -> &BoundaryTrace<T> {
        &self.flux
    }

    pub fn noise(&self) -> T {
        self.noise
    }

    pub fn meta(&self) -> &ObservationMeta {
        &self.meta
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        self.phi.nodes().domain()
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        self.phi.time_grid()
    }
}

/// Grids and noise for [`synthesize_observation`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams<T> {
    /// Cells per axis of the grid the forward problem is solved on.
    pub fine_cells: Vec<usize>,
    pub fine_steps: usize,
    /// Cells per axis of the reconstruction grid; fixes the boundary nodes.
    pub coarse_cells: Vec<usize>,
    pub coarse_steps: usize,
    /// Relative noise level `η`.
    pub noise: T,
    pub seed: u64,
}

impl<T: Real> SynthesisParams<T> {
    /// The fine grid must be strictly finer on every axis and its time grid
    /// must subsample onto the coarse one.
    pub fn validate(&self) -> Result<()> {
        if self.fine_cells.len() != self.coarse_cells.len() {
            return Err(Error::config("fine and coarse grids have different dimensions"));
        }
        if self.fine_cells.iter().zip(&self.coarse_cells).any(|(f, c)| f <= c) {
            return Err(Error::config(format!(
                "synthesis grid {:?} must be strictly finer than the reconstruction grid {:?}",
                self.fine_cells, self.coarse_cells
            )));
        }
        if self.coarse_steps == 0 || !self.fine_steps.is_multiple_of(self.coarse_steps) || self.fine_steps < self.coarse_steps {
            return Err(Error::config(format!(
                "fine steps {} must be a multiple of coarse steps {}",
                self.fine_steps, self.coarse_steps
            )));
        }
        if !(self.noise >= T::zero()) || !self.noise.is_finite() {
            return Err(Error::config(format!("noise level must be nonnegative, got {}", self.noise)));
        }
        Ok(())
    }
}

/// Adds `N(0, (η max|ψ|)^2)` noise to every sample, reproducibly in `seed`.
pub fn perturb<T: Real>(trace: &BoundaryTrace<T>, noise: T, seed: u64) -> Result<BoundaryTrace<T>> {
    if noise == T::zero() {
        return Ok(trace.clone());
    }
    let sigma = (noise * trace.max_abs()).to_f64_lossy();
    if sigma == 0.0 {
        return Ok(trace.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(format!("noise model: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = trace
        .rows()
        .iter()
        .map(|row| row.iter().map(|&v| v + T::lit(normal.sample(&mut rng))).collect())
        .collect();
    BoundaryTrace::new(trace.nodes().clone(), *trace.time_grid(), values)
}

/// Synthetic observation together with the fine forward solution it came
/// from.
#[derive(Debug, Clone)]
pub struct Synthesis<T> {
    pub observation: ObservedData<T>,
    pub solution: SolutionField<T>,
}

/// Solves the forward problem on the fine grid, takes its Neumann trace,
/// perturbs it, and subsamples to the reconstruction's boundary nodes and
/// time grid. `φ` is sampled directly on the coarse nodes.
pub fn synthesize<T: Real>(
    domain: DomainSpec<T>,
    f: &NonlinearityFn<T>,
    phi: &DirichletData<T>,
    params: &SynthesisParams<T>,
) -> Result<Synthesis<T>> {
    params.validate()?;
    let fine = build_grid(domain, &params.fine_cells)?;
    let coarse = build_grid(domain, &params.coarse_cells)?;
    let solution = solve_semilinear(&fine, f, phi, params.fine_steps, None)?;
    let flux = perturb(&neumann_trace(&solution)?, params.noise, params.seed)?;
    let coarse_time = TimeGrid::new(phi.horizon(), params.coarse_steps)?;
    let nodes = grid_boundary_nodes(&coarse)?;
    let flux = flux.subsample_time(coarse_time)?.resample_nodes(&nodes)?;
    let phi_trace = BoundaryTrace::from_fn(nodes, coarse_time, |p, t| phi.value(p, t));
    let meta = ObservationMeta {
        fine_cells: params.fine_cells.clone(),
        fine_steps: params.fine_steps,
        seed: params.seed,
        generator: Some(f.label().to_string()),
    };
    let observation = ObservedData::new(phi_trace, flux, params.noise, meta)?;
    Ok(Synthesis { observation, solution })
}

pub fn synthesize_observation<T: Real>(
    domain: DomainSpec<T>,
    f: &NonlinearityFn<T>,
    phi: &DirichletData<T>,
    params: &SynthesisParams<T>,
) -> Result<ObservedData<T>> {
    Ok(synthesize(domain, f, phi, params)?.observation)
}

/// The reconstruction grid implied by an observation with `cells` per axis.
pub fn reconstruction_grid<T: Real>(obs: &ObservedData<T>, cells: &[usize]) -> Result<SpatialGrid<T>> {
    let grid = build_grid(*obs.domain(), cells)?;
    if !grid_boundary_nodes(&grid)?.same_layout(obs.phi().nodes()) {
        return Err(Error::input("reconstruction grid does not match the observation's boundary nodes"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Point;
    use crate::forward::solve_linear_heat;

    fn params(noise: f64, seed: u64) -> SynthesisParams<f64> {
        SynthesisParams {
            fine_cells: vec![64],
            fine_steps: 256,
            coarse_cells: vec![32],
            coarse_steps: 64,
            noise,
            seed,
        }
    }

    fn phi() -> DirichletData<f64> {
        DirichletData::new(1.0, |p: Point<f64>, t| t * (1.0 + p.x))
    }

    #[test]
    fn zero_f_observation_is_linear_heat_flux() {
        let d = DomainSpec::interval(1.0).unwrap();
        let obs = synthesize_observation(d, &NonlinearityFn::zero(), &phi(), &params(0.0, 1)).unwrap();
        let fine = build_grid(d, &[64]).unwrap();
        let v = solve_linear_heat(&fine, &phi(), 256).unwrap();
        let direct = neumann_trace(&v).unwrap().subsample_time(*obs.time_grid()).unwrap();
        assert_eq!(obs.flux().rows(), direct.rows());
        assert_eq!(obs.meta().generator.as_deref(), Some("zero"));
    }

    #[test]
    fn noise_is_seeded() {
        let d = DomainSpec::interval(1.0).unwrap();
        let f = NonlinearityFn::linear(1.0);
        let a = synthesize_observation(d, &f, &phi(), &params(0.01, 7)).unwrap();
        let b = synthesize_observation(d, &f, &phi(), &params(0.01, 7)).unwrap();
        let c = synthesize_observation(d, &f, &phi(), &params(0.01, 8)).unwrap();
        let clean = synthesize_observation(d, &f, &phi(), &params(0.0, 7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.flux(), c.flux());
        assert_eq!(a.phi(), clean.phi());
        let dev = a.flux().zip_with(clean.flux(), |x, y| x - y).unwrap().max_abs();
        assert!(dev > 0.0 && dev < 0.06 * clean.flux().max_abs());
    }

    #[test]
    fn inverse_crime_guard() {
        let mut p = params(0.0, 0);
        p.fine_cells = vec![32];
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        let mut p = params(0.0, 0);
        p.fine_steps = 100;
        assert!(p.validate().is_err());

        // the fine-grid trace differs from one computed on the coarse grid
        let d = DomainSpec::interval(1.0).unwrap();
        let f = NonlinearityFn::linear(1.0);
        let obs = synthesize_observation(d, &f, &phi(), &params(0.0, 0)).unwrap();
        let coarse = build_grid(d, &[32]).unwrap();
        let u = solve_semilinear(&coarse, &f, &phi(), 64, None).unwrap();
        let direct = neumann_trace(&u).unwrap();
        let diff = obs.flux().zip_with(&direct, |a, b| a - b).unwrap().max_abs();
        assert!(diff > 1e-8, "{diff}");
        let last = obs.time_grid().steps;
        for b in 0..2 {
            assert!((obs.flux().at(last, b) - direct.at(last, b)).abs() < 1e-2 * direct.max_abs());
        }
    }

    #[test]
    fn rectangle_observation_resamples_to_coarse_nodes() {
        let d = DomainSpec::rectangle(1.0, 1.0).unwrap();
        let p = SynthesisParams {
            fine_cells: vec![16, 16],
            fine_steps: 32,
            coarse_cells: vec![8, 8],
            coarse_steps: 16,
            noise: 0.0,
            seed: 0,
        };
        let phi = DirichletData::new(1.0, |_: Point<f64>, t| t);
        let obs = synthesize_observation(d, &NonlinearityFn::zero(), &phi, &p).unwrap();
        assert_eq!(obs.flux().nodes().len(), 32);
        assert_eq!(obs.time_grid().steps, 16);
        assert!(reconstruction_grid(&obs, &[8, 8]).is_ok());
        assert!(reconstruction_grid(&obs, &[16, 16]).is_err());
    }
}
