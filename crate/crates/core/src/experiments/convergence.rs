//! Manufactured-solution refinement studies for the forward solver.

use serde::Serialize;

use crate::domain::{build_grid, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::forward::{solve_linear_heat, solve_semilinear, verify_w_problem, verify_w_problem_from, DirichletData, NonlinearityFn, SolutionField};

/// `u*(x, t) = (1 - cos 3t) Π_a sin(π x_a / L_a)` with the source that makes
/// it solve `∂_t u - Δu + f(u) = h` and zero Dirichlet data.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub domain: DomainSpec<f64>,
    pub horizon: f64,
}

impl Manufactured {
    pub fn new(domain: DomainSpec<f64>, horizon: f64) -> Self {
        Manufactured { domain, horizon }
    }

    fn shape(&self, p: Point<f64>) -> f64 {
        (0..self.domain.dim()).map(|a| (std::f64::consts::PI * p.coord(a) / self.domain.length(a)).sin()).product()
    }

    fn eigenvalue(&self) -> f64 {
        (0..self.domain.dim()).map(|a| (std::f64::consts::PI / self.domain.length(a)).powi(2)).sum()
    }

    pub fn exact(&self, p: Point<f64>, t: f64) -> f64 {
        (1.0 - (3.0 * t).cos()) * self.shape(p)
    }

    pub fn source(&self, f: &NonlinearityFn<f64>) -> impl Fn(Point<f64>, f64) -> f64 + Send + Sync + 'static {
        let (me, lambda, f) = (*self, self.eigenvalue(), f.clone());
        move |p, t| {
            let x = me.shape(p);
            let s = 1.0 - (3.0 * t).cos();
            3.0 * (3.0 * t).sin() * x + lambda * s * x + f.value(s * x)
        }
    }

    pub fn solve(&self, f: &NonlinearityFn<f64>, cells: &[usize], steps: usize) -> Result<SolutionField<f64>> {
        let grid = build_grid(self.domain, cells)?;
        let src = self.source(f);
        solve_semilinear(&grid, f, &DirichletData::zero(self.horizon), steps, Some(&src))
    }
}

/// One refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub cells: Vec<usize>,
    pub steps: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
    /// `log2(e_{l-1} / e_l)`; absent on the first level.
    pub rate: Option<f64>,
}

fn with_rates(mut levels: Vec<Level>) -> Vec<Level> {
    for i in 1..levels.len() {
        levels[i].rate = Some((levels[i - 1].error / levels[i].error).log2());
    }
    levels
}

fn level(m: &Manufactured, cells: Vec<usize>, steps: usize, error: f64) -> Level {
    let h = (0..m.domain.dim()).map(|a| m.domain.length(a) / cells[a] as f64).fold(0.0, f64::max);
    Level { cells, steps, h, dt: m.horizon / steps as f64, error, rate: None }
}

fn require_levels(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::config(format!("a convergence study needs at least 3 levels, got {n}")));
    }
    Ok(())
}

/// Max-norm error against `u*` over all nodes and time levels, halving `h`
/// at fixed `steps`.
pub fn spatial_study(m: &Manufactured, f: &NonlinearityFn<f64>, cells: &[Vec<usize>], steps: usize) -> Result<Vec<Level>> {
    require_levels(cells.len())?;
    let levels = cells
        .iter()
        .map(|c| {
            let u = m.solve(f, c, steps)?;
            let exact = SolutionField::from_fn(u.grid().clone(), *u.time_grid(), |p, t| m.exact(p, t));
            let err = u.zip_with(&exact, |a, b| (a - b).abs())?.max();
            Ok(level(m, c.clone(), steps, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_rates(levels))
}

/// Max-norm error against a run with 16 times the finest step count on the
/// same grid, over the time levels shared by all runs.
pub fn temporal_study(m: &Manufactured, f: &NonlinearityFn<f64>, cells: &[usize], steps: &[usize]) -> Result<Vec<Level>> {
    require_levels(steps.len())?;
    let finest = steps.iter().copied().max().unwrap_or(1);
    let reference_steps = 16 * finest;
    if steps.iter().any(|&s| s == 0 || reference_steps % s != 0) {
        return Err(Error::config("temporal levels must divide the finest step count"));
    }
    let reference = m.solve(f, cells, reference_steps)?;
    let levels = steps
        .iter()
        .map(|&s| {
            let u = m.solve(f, cells, s)?;
            let stride = reference_steps / s;
            let err = (0..=s).fold(0.0f64, |acc, j| {
                u.snapshot(j)
                    .iter()
                    .zip(reference.snapshot(j * stride))
                    .fold(acc, |a, (x, y)| a.max((x - y).abs()))
            });
            Ok(level(m, cells.to_vec(), s, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_rates(levels))
}

/// Interior residual of the `w = u_f - v_φ` problem for `f(u) = u`,
/// `φ = t x` on the unit interval: `(all times, t > 0.1)` per level.
pub fn w_residual_study(levels: &[(usize, usize)]) -> Result<Vec<(f64, f64)>> {
    require_levels(levels.len())?;
    let domain = DomainSpec::interval(1.0)?;
    let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * p.x);
    let f = NonlinearityFn::linear(1.0);
    levels
        .iter()
        .map(|&(n, steps)| {
            let g = build_grid(domain, &[n])?;
            let u = solve_semilinear(&g, &f, &phi, steps, None)?;
            let v = solve_linear_heat(&g, &phi, steps)?;
            let full = verify_w_problem(&u, &v, &f)?.interior_residual;
            let late = verify_w_problem_from(&u, &v, &f, 0.1)?.interior_residual;
            Ok((full, late))
        })
        .collect()
}

/// CSV table of one or more studies with a `# config` echo line.
pub fn levels_csv(studies: &[(&str, &[Level])], config_json: &str) -> String {
    let mut out = format!("# semirecon convergence v{}\n# config {config_json}\n", super::config::SCHEMA_VERSION);
    out.push_str("study,level,cells,steps,h,dt,error,rate\n");
    for (study, levels) in studies {
        for (i, l) in levels.iter().enumerate() {
            let cells: Vec<String> = l.cells.iter().map(|c| c.to_string()).collect();
            let rate = l.rate.map_or(String::new(), super::io::fmt_float);
            out.push_str(&format!(
                "{study},{i},{},{},{},{},{},{rate}\n",
                cells.join("x"),
                l.steps,
                super::io::fmt_float(l.h),
                super::io::fmt_float(l.dt),
                super::io::fmt_float(l.error),
            ));
        }
    }
    out
}
