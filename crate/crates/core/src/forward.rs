//! Forward solvers for the semilinear problem `∂_t u - Δu + f(u) = h` with
//! Dirichlet data, Neumann trace extraction, and the `w = u_f - v_φ`
//! residual check.
//!
//! Space: second-order central differences on the uniform grid. Time:
//! Crank–Nicolson on the diffusion with the reaction and source treated
//! explicitly by second-order extrapolation. The first step uses a
//! backward-Euler IMEX predictor followed by a trapezoidal corrector.

use std::fmt;
use std::sync::Arc;

use crate::domain::{boundary_nodes, BoundaryNodeSet, Point, Side, SpatialGrid, MIN_RESOLVED_CELLS};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, SpaceTimeField, TimeGrid};
use crate::linalg::{conjugate_gradient, solve_tridiagonal};
use crate::scalar::Real;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type SpaceTimeFn<T> = Arc<dyn Fn(Point<T>, T) -> T + Send + Sync>;

/// The semilinear term `f` with its derivative.
#[derive(Clone)]
pub struct NonlinearityFn<T> {
    eval: ScalarFn<T>,
    derivative: ScalarFn<T>,
    label: String,
}

impl<T> fmt::Debug for NonlinearityFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearityFn").field("label", &self.label).finish()
    }
}

impl<T: Real> NonlinearityFn<T> {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
        derivative: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        NonlinearityFn { eval: Arc::new(eval), derivative: Arc::new(derivative), label: label.into() }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| T::zero(), |_| T::zero())
    }

    /// `c u`.
    pub fn linear(c: T) -> Self {
        Self::new(format!("linear({c})"), move |u| c * u, move |_| c)
    }

    /// `max(u, 0)^p`, `p >= 1`.
    pub fn power(p: T) -> Self {
        Self::new(
            format!("power({p})"),
            move |u: T| if u > T::zero() { u.powf(p) } else { T::zero() },
            move |u: T| if u > T::zero() { p * u.powf(p - T::one()) } else { T::zero() },
        )
    }

    /// `u / (1 + |u|)`.
    pub fn saturating() -> Self {
        Self::new(
            "saturating",
            |u: T| u / (T::one() + u.abs()),
            |u: T| {
                let d = T::one() + u.abs();
                T::one() / (d * d)
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, u: T) -> T {
        (self.eval)(u)
    }

    #[inline]
    pub fn derivative(&self, u: T) -> T {
        (self.derivative)(u)
    }

    /// Sampled admissibility on `[0, upper]`: `f(0) = 0`, `f >= 0`,
    /// nondecreasing.
    pub fn check_admissible(&self, upper: T) -> Result<()> {
        let tol = T::epsilon() * T::lit(1e3);
        let f0 = self.value(T::zero());
        if f0.abs() > tol {
            return Err(Error::input(format!("f(0) = {f0} but must vanish ({})", self.label)));
        }
        let samples = 257;
        let upper = upper.max(T::one());
        let mut prev = f0;
        for i in 1..samples {
            let u = upper * T::from_usize_lossy(i) / T::from_usize_lossy(samples - 1);
            let v = self.value(u);
            if !v.is_finite() || v < -tol {
                return Err(Error::input(format!("f({u}) = {v} is negative ({})", self.label)));
            }
            if v < prev - tol * (T::one() + prev.abs()) {
                return Err(Error::input(format!("f decreases near u = {u} ({})", self.label)));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Dirichlet data `φ(x, t)` on `∂Ω x [0, T]`.
#[derive(Clone)]
pub struct DirichletData<T> {
    eval: SpaceTimeFn<T>,
    horizon: T,
}

impl<T> fmt::Debug for DirichletData<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletData").field("horizon", &self.horizon).finish()
    }
}

impl<T: Real> DirichletData<T> {
    pub fn new(horizon: T, eval: impl Fn(Point<T>, T) -> T + Send + Sync + 'static) -> Self {
        DirichletData { eval: Arc::new(eval), horizon }
    }

    pub fn zero(horizon: T) -> Self {
        Self::new(horizon, |_, _| T::zero())
    }

    /// Piecewise-linear data interpolated from a sampled trace.
    pub fn from_trace(trace: BoundaryTrace<T>) -> Self {
        let horizon = trace.time_grid().horizon;
        let domain = *trace.nodes().domain();
        let lengths = domain.lengths();
        Self::new(horizon, move |p, t| {
            let tol = T::epsilon() * T::lit(1e3);
            let side = if lengths.len() == 1 {
                if p.x <= lengths[0] / T::lit(2.0) {
                    Side::Left
                } else {
                    Side::Right
                }
            } else if p.y.abs() <= tol {
                Side::Bottom
            } else if (p.y - lengths[1]).abs() <= tol {
                Side::Top
            } else if p.x.abs() <= tol {
                Side::Left
            } else {
                Side::Right
            };
            let tangential = if lengths.len() == 1 { T::zero() } else { p.coord(side.tangent_axis()) };
            trace.interpolate(side, tangential, t.min(horizon))
        })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    #[inline]
    pub fn value(&self, p: Point<T>, t: T) -> T {
        (self.eval)(p, t)
    }

    /// Samples on the boundary nodes of `grid` at `steps + 1` times.
    pub fn max_on(&self, grid: &SpatialGrid<T>, time: &TimeGrid<T>) -> T {
        let boundary: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_boundary(k)).collect();
        let mut m = T::zero();
        for j in 0..time.len() {
            let t = time.time(j);
            for &k in &boundary {
                m = m.max(self.value(grid.node(k), t));
            }
        }
        m
    }

    /// `φ(·, 0) = 0`, `φ >= 0`, and (when `require_nonzero`) `φ ≢ 0`, sampled
    /// on the boundary nodes of `grid`.
    pub fn check_admissible(&self, grid: &SpatialGrid<T>, time: &TimeGrid<T>, require_nonzero: bool) -> Result<()> {
        let tol = T::epsilon() * T::lit(1e3);
        let boundary: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_boundary(k)).collect();
        let mut nonzero = false;
        for j in 0..time.len() {
            let t = time.time(j);
            for &k in &boundary {
                let v = self.value(grid.node(k), t);
                if !v.is_finite() {
                    return Err(Error::input(format!("φ is not finite at t = {t}")));
                }
                if j == 0 && v.abs() > tol {
                    return Err(Error::input(format!("φ(·, 0) must vanish, got {v}")));
                }
                if v < -tol {
                    return Err(Error::input(format!("φ must be nonnegative, got {v} at t = {t}")));
                }
                nonzero |= v.abs() > tol;
            }
        }
        if require_nonzero && !nonzero {
            return Err(Error::input("φ vanishes identically"));
        }
        Ok(())
    }
}

/// Manufactured source term; only used by convergence studies.
pub type Source<T> = dyn Fn(Point<T>, T) -> T + Send + Sync;

pub type SolutionField<T> = SpaceTimeField<T>;

/// Implicit part `(I - c Δ_h) u = r` on the interior with the boundary
/// values of `u` already set.
struct ImplicitSolver<'g, T> {
    grid: &'g SpatialGrid<T>,
    interior: Vec<usize>,
    /// Position of each grid node in `interior`, `usize::MAX` on the boundary.
    slot: Vec<usize>,
}

impl<'g, T: Real> ImplicitSolver<'g, T> {
    fn new(grid: &'g SpatialGrid<T>) -> Self {
        let interior = grid.interior_indices();
        let mut slot = vec![usize::MAX; grid.len()];
        for (s, &k) in interior.iter().enumerate() {
            slot[k] = s;
        }
        ImplicitSolver { grid, interior, slot }
    }

    /// Solves for the interior of `u` in place; `rhs` is indexed like the grid.
    fn solve(&self, c: T, rhs: &[T], u: &mut [T]) -> Result<()> {
        let g = self.grid;
        let hx2 = g.spacing(0) * g.spacing(0);
        let two = T::lit(2.0);
        // move known boundary neighbours to the right-hand side
        let mut b: Vec<T> = self.interior.iter().map(|&k| rhs[k]).collect();
        for (s, &k) in self.interior.iter().enumerate() {
            let (i, j) = g.ij(k);
            let mut add = T::zero();
            for nb in [g.index(i - 1, j), g.index(i + 1, j)] {
                if self.slot[nb] == usize::MAX {
                    add = add + u[nb] / hx2;
                }
            }
            if g.dim() == 2 {
                let hy2 = g.spacing(1) * g.spacing(1);
                for nb in [g.index(i, j - 1), g.index(i, j + 1)] {
                    if self.slot[nb] == usize::MAX {
                        add = add + u[nb] / hy2;
                    }
                }
            }
            b[s] = b[s] + c * add;
        }
        if g.dim() == 1 {
            let n = b.len();
            let off = -c / hx2;
            let sub = vec![off; n];
            let sup = vec![off; n];
            let diag = vec![T::one() + two * c / hx2; n];
            solve_tridiagonal(&sub, &diag, &sup, &mut b);
            for (s, &k) in self.interior.iter().enumerate() {
                u[k] = b[s];
            }
            return Ok(());
        }
        let hy2 = g.spacing(1) * g.spacing(1);
        let diag = T::one() + two * c / hx2 + two * c / hy2;
        let apply = |v: &[T], out: &mut [T]| {
            for (s, &k) in self.interior.iter().enumerate() {
                let (i, j) = g.ij(k);
                let mut acc = diag * v[s];
                for (nb, h2) in [
                    (g.index(i - 1, j), hx2),
                    (g.index(i + 1, j), hx2),
                    (g.index(i, j - 1), hy2),
                    (g.index(i, j + 1), hy2),
                ] {
                    let t = self.slot[nb];
                    if t != usize::MAX {
                        acc = acc - c * v[t] / h2;
                    }
                }
                out[s] = acc;
            }
        };
        let mut x: Vec<T> = self.interior.iter().map(|&k| u[k]).collect();
        let tol = T::epsilon() * T::lit(16.0);
        let max_iter = 20 * x.len() + 100;
        let stats = conjugate_gradient(apply, &b, &mut x, tol, max_iter);
        if !stats.relative_residual.is_finite() || stats.relative_residual > T::lit(1e-8).max(tol) {
            return Err(Error::Numerical {
                message: format!("implicit solve stalled at relative residual {}", stats.relative_residual),
                step: 0,
                time: 0.0,
            });
        }
        for (s, &k) in self.interior.iter().enumerate() {
            u[k] = x[s];
        }
        Ok(())
    }
}

fn check_resolution<T: Real>(grid: &SpatialGrid<T>) -> Result<()> {
    for axis in 0..grid.dim() {
        if grid.cells(axis) < MIN_RESOLVED_CELLS {
            return Err(Error::config(format!(
                "solver needs at least {MIN_RESOLVED_CELLS} cells per axis, got {}",
                grid.cells(axis)
            )));
        }
    }
    Ok(())
}

/// Solves `∂_t u - Δu + f(u) = h`, `u = φ` on `∂Ω`, `u(·, 0) = 0` over
/// `[0, φ.horizon()]` with `steps` time steps.
///
/// Admissibility of `f` and `φ` is checked by sampling. When a manufactured
/// `source` is given the `φ ≢ 0` requirement is waived.
pub fn solve_semilinear<T: Real>(
    grid: &SpatialGrid<T>,
    f: &NonlinearityFn<T>,
    phi: &DirichletData<T>,
    steps: usize,
    source: Option<&Source<T>>,
) -> Result<SolutionField<T>> {
    check_resolution(grid)?;
    let time = TimeGrid::new(phi.horizon(), steps)?;
    phi.check_admissible(grid, &time, source.is_none())?;
    f.check_admissible(phi.max_on(grid, &time))?;

    let n = grid.len();
    let dt = time.dt();
    let half = T::lit(0.5);
    let solver = ImplicitSolver::new(grid);
    let nodes: Vec<Point<T>> = grid.nodes().collect();
    let boundary: Vec<usize> = (0..n).filter(|&k| grid.is_boundary(k)).collect();

    let reaction = |u: &[T], t: T| -> Vec<T> {
        (0..n)
            .map(|k| {
                let h = source.map_or(T::zero(), |s| s(nodes[k], t));
                h - f.value(u[k])
            })
            .collect()
    };
    let set_boundary = |u: &mut [T], t: T| {
        for &k in &boundary {
            u[k] = phi.value(nodes[k], t);
        }
    };
    // r = u + (1 - θ) dt Δ_h u + dt N on the interior
    let explicit_rhs = |u: &[T], explicit_weight: T, forcing: &[T]| -> Vec<T> {
        let mut r = u.to_vec();
        for &k in &solver.interior {
            let lap = if explicit_weight > T::zero() { grid.laplacian_at(u, k) } else { T::zero() };
            r[k] = u[k] + explicit_weight * dt * lap + dt * forcing[k];
        }
        r
    };
    let check = |u: &[T], step: usize| -> Result<()> {
        if u.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numerical {
                message: "non-finite value in solution".into(),
                step,
                time: time.time(step).to_f64_lossy(),
            })
        }
    };

    let mut snapshots: Vec<Vec<T>> = Vec::with_capacity(time.len());
    let u0 = vec![T::zero(); n];
    snapshots.push(u0.clone());

    // startup: backward-Euler IMEX predictor, trapezoidal corrector
    let t1 = time.time(1);
    let n0 = reaction(&u0, T::zero());
    let mut pred = explicit_rhs(&u0, T::zero(), &n0);
    set_boundary(&mut pred, t1);
    let rhs = pred.clone();
    solver.solve(dt, &rhs, &mut pred)?;
    let n_pred = reaction(&pred, t1);
    let forcing: Vec<T> = n0.iter().zip(&n_pred).map(|(&a, &b)| half * (a + b)).collect();
    let mut u1 = explicit_rhs(&u0, half, &forcing);
    set_boundary(&mut u1, t1);
    let rhs = u1.clone();
    solver.solve(half * dt, &rhs, &mut u1)?;
    check(&u1, 1)?;
    snapshots.push(u1);

    let three_halves = T::lit(1.5);
    let mut n_prev = n0;
    for step in 1..steps {
        let t_now = time.time(step);
        let t_next = time.time(step + 1);
        let u_now = &snapshots[step];
        let n_now = reaction(u_now, t_now);
        let forcing: Vec<T> = if let Some(s) = source {
            // reaction extrapolated, source averaged exactly in time
            (0..n)
                .map(|k| {
                    let f_now = n_now[k] - s(nodes[k], t_now);
                    let f_prev = n_prev[k] - s(nodes[k], time.time(step - 1));
                    three_halves * f_now - half * f_prev + half * (s(nodes[k], t_now) + s(nodes[k], t_next))
                })
                .collect()
        } else {
            n_now.iter().zip(&n_prev).map(|(&a, &b)| three_halves * a - half * b).collect()
        };
        let mut next = explicit_rhs(u_now, half, &forcing);
        set_boundary(&mut next, t_next);
        let rhs = next.clone();
        solver.solve(half * dt, &rhs, &mut next).map_err(|e| match e {
            Error::Numerical { message, .. } => {
                Error::Numerical { message, step: step + 1, time: t_next.to_f64_lossy() }
            }
            other => other,
        })?;
        check(&next, step + 1)?;
        snapshots.push(next);
        n_prev = n_now;
    }
    SpaceTimeField::from_snapshots(grid.clone(), time, snapshots)
}

/// Heat equation with Dirichlet data: [`solve_semilinear`] with `f ≡ 0`.
pub fn solve_linear_heat<T: Real>(grid: &SpatialGrid<T>, phi: &DirichletData<T>, steps: usize) -> Result<SolutionField<T>> {
    solve_semilinear(grid, &NonlinearityFn::zero(), phi, steps, None)
}

/// Boundary nodes matching a grid: the endpoints on the interval, one
/// midpoint node per cell of the longer side count on the rectangle.
pub fn grid_boundary_nodes<T: Real>(grid: &SpatialGrid<T>) -> Result<BoundaryNodeSet<T>> {
    let m = (0..grid.dim()).map(|a| grid.cells(a)).max().unwrap_or(0);
    boundary_nodes(*grid.domain(), m)
}

/// Outward normal derivative on the grid's natural boundary nodes.
pub fn neumann_trace<T: Real>(field: &SolutionField<T>) -> Result<BoundaryTrace<T>> {
    let nodes = grid_boundary_nodes(field.grid())?;
    neumann_trace_on(field, &nodes)
}

/// Outward normal derivative by the second-order one-sided stencil along
/// the inward axis. On the rectangle the stencil is applied at every grid
/// point of a side (corners included, along that side's normal) and
/// interpolated linearly to the requested nodes.
pub fn neumann_trace_on<T: Real>(field: &SolutionField<T>, nodes: &BoundaryNodeSet<T>) -> Result<BoundaryTrace<T>> {
    let grid = field.grid();
    check_resolution(grid)?;
    if nodes.domain() != grid.domain() {
        return Err(Error::input("boundary nodes and field live on different domains"));
    }
    let time = *field.time_grid();
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    // one-sided derivative at a side point with tangential grid index `q`
    let stencil = |snap: &[T], side: Side, q: usize| -> T {
        let axis = side.normal_axis();
        let cells = grid.cells(axis);
        let h = grid.spacing(axis);
        let idx = |r: usize| -> usize {
            let along = if side.at_origin() { r } else { cells - r };
            if axis == 0 {
                grid.index(along, q)
            } else {
                grid.index(q, along)
            }
        };
        // derivative along the inward direction
        let inward = (-three * snap[idx(0)] + four * snap[idx(1)] - snap[idx(2)]) / (two * h);
        -inward
    };
    let mut values = Vec::with_capacity(time.len());
    for j in 0..time.len() {
        let snap = field.snapshot(j);
        let row: Vec<T> = nodes
            .nodes()
            .iter()
            .map(|node| {
                if grid.dim() == 1 {
                    return stencil(snap, node.side, 0);
                }
                let t_axis = node.side.tangent_axis();
                let h = grid.spacing(t_axis);
                let pos = node.point.coord(t_axis) / h;
                let cells = grid.cells(t_axis);
                let mut q = pos.floor().to_usize().unwrap_or(0);
                if q >= cells {
                    q = cells - 1;
                }
                let w = pos - T::from_usize_lossy(q);
                stencil(snap, node.side, q) * (T::one() - w) + stencil(snap, node.side, q + 1) * w
            })
            .collect();
        values.push(row);
    }
    BoundaryTrace::new(nodes.clone(), time, values)
}

/// Residuals of the `w = u_f - v_φ` problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WProblemReport<T> {
    /// `max |D_t w - Δ_h w̄ + f̄(u_f)|` over interior nodes and half steps,
    /// with bars denoting the average of consecutive time levels.
    pub interior_residual: T,
    pub boundary_deviation: T,
    pub initial_deviation: T,
}

pub fn verify_w_problem<T: Real>(
    u_f: &SolutionField<T>,
    v_phi: &SolutionField<T>,
    f: &NonlinearityFn<T>,
) -> Result<WProblemReport<T>> {
    verify_w_problem_from(u_f, v_phi, f, T::zero())
}

/// As [`verify_w_problem`], but the interior residual only counts time
/// cells ending after `t_start`. Incompatible data (`∂_t φ(·, 0) ≠ 0`)
/// leaves a first-order layer near `t = 0` in the extrapolated reaction;
/// skipping it exposes the second-order behavior elsewhere.
pub fn verify_w_problem_from<T: Real>(
    u_f: &SolutionField<T>,
    v_phi: &SolutionField<T>,
    f: &NonlinearityFn<T>,
    t_start: T,
) -> Result<WProblemReport<T>> {
    let w = u_f.zip_with(v_phi, |a, b| a - b)?;
    let grid = w.grid();
    let time = *w.time_grid();
    let dt = time.dt();
    let half = T::lit(0.5);
    let interior = grid.interior_indices();
    let boundary: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_boundary(k)).collect();
    let mut residual = T::zero();
    let mut bdev = T::zero();
    for j in 0..time.len() {
        let wj = w.snapshot(j);
        for &k in &boundary {
            bdev = bdev.max(wj[k].abs());
        }
        if j == 0 || time.time(j) <= t_start {
            continue;
        }
        let wp = w.snapshot(j - 1);
        let (up, uj) = (u_f.snapshot(j - 1), u_f.snapshot(j));
        for &k in &interior {
            let lap = half * (grid.laplacian_at(wj, k) + grid.laplacian_at(wp, k));
            let react = half * (f.value(uj[k]) + f.value(up[k]));
            let r = (wj[k] - wp[k]) / dt - lap + react;
            residual = residual.max(r.abs());
        }
    }
    let initial = crate::scalar::max_abs(w.snapshot(0));
    Ok(WProblemReport { interior_residual: residual, boundary_deviation: bdev, initial_deviation: initial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> SpatialGrid<f64> {
        build_grid(DomainSpec::interval(1.0).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn admissibility_checks() {
        assert!(NonlinearityFn::<f64>::linear(2.0).check_admissible(1.0).is_ok());
        assert!(NonlinearityFn::<f64>::power(2.0).check_admissible(3.0).is_ok());
        assert!(NonlinearityFn::<f64>::saturating().check_admissible(3.0).is_ok());
        let shifted = NonlinearityFn::<f64>::new("shifted", |u| u + 1.0, |_| 1.0);
        assert!(matches!(shifted.check_admissible(1.0), Err(Error::Input(_))));
        let decreasing = NonlinearityFn::<f64>::new("dec", |u: f64| u * (1.0 - u), |u| 1.0 - 2.0 * u);
        assert!(decreasing.check_admissible(0.9).is_err());

        let g = unit_grid(8);
        let phi = DirichletData::new(1.0, |_, t| t + 0.1);
        assert!(matches!(solve_linear_heat(&g, &phi, 8), Err(Error::Input(_))));
        let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * (p.x - 0.5));
        assert!(solve_linear_heat(&g, &phi, 8).is_err());
        assert!(solve_linear_heat(&g, &DirichletData::zero(1.0), 8).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = unit_grid(4);
        let phi = DirichletData::new(1.0, |_, t| t);
        assert!(matches!(solve_linear_heat(&g, &phi, 8), Err(Error::Config(_))));
    }

    #[test]
    fn zero_nonlinearity_matches_linear_solver() {
        let g = unit_grid(32);
        let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * (1.0 + p.x));
        let a = solve_semilinear(&g, &NonlinearityFn::zero(), &phi, 64, None).unwrap();
        let b = solve_linear_heat(&g, &phi, 64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_heat_maximum_principle() {
        let g = unit_grid(64);
        let phi = DirichletData::new(1.0, |_, t| t);
        let v = solve_linear_heat(&g, &phi, 256).unwrap();
        for j in 0..v.time_grid().len() {
            let t = v.time_grid().time(j);
            assert!(v.snapshot(j).iter().all(|&x| x <= t + 1e-12 && x >= -1e-12));
        }
    }

    #[test]
    fn frozen_boundary_relaxes_to_linear_profile() {
        let g = unit_grid(32);
        // ramps to (a, b) = (1, 2) by t = 0.1 then holds
        let phi = DirichletData::new(4.0, |p: Point<f64>, t: f64| (t / 0.1).min(1.0) * (1.0 + p.x));
        let v = solve_linear_heat(&g, &phi, 400).unwrap();
        let last = v.snapshot(v.time_grid().steps);
        for (k, p) in g.nodes().enumerate() {
            assert!((last[k] - (1.0 + p.x)).abs() < 1e-6);
        }
    }

    #[test]
    fn comparison_principle() {
        let g = unit_grid(64);
        let phi = DirichletData::new(1.0, |_, t| t);
        let u = solve_semilinear(&g, &NonlinearityFn::linear(1.0), &phi, 256, None).unwrap();
        let v = solve_linear_heat(&g, &phi, 256).unwrap();
        assert!(u.min() >= -1e-10);
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!(*a <= b + 1e-10);
        }
    }

    fn manufactured_error(n: usize, steps: usize) -> f64 {
        // u* = t sin(πx), f(u) = u
        let g = unit_grid(n);
        let phi = DirichletData::zero(1.0);
        let src = |p: Point<f64>, t: f64| (1.0 + (PI * PI + 1.0) * t) * (PI * p.x).sin();
        let u = solve_semilinear(&g, &NonlinearityFn::linear(1.0), &phi, steps, Some(&src)).unwrap();
        let exact = SpaceTimeField::from_fn(g, *u.time_grid(), |p, t| t * (PI * p.x).sin());
        u.values().iter().zip(exact.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn manufactured_spatial_rate() {
        let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| manufactured_error(n, 1024)).collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn trace_stencils() {
        let g = unit_grid(16);
        let tg = TimeGrid::new(1.0, 2).unwrap();
        let lin = SpaceTimeField::from_fn(g.clone(), tg, |p, _| p.x);
        let tr = neumann_trace(&lin).unwrap();
        assert!((tr.at(1, 0) + 1.0).abs() < 1e-12 && (tr.at(1, 1) - 1.0).abs() < 1e-12);
        let quad = SpaceTimeField::from_fn(g, tg, |p, _| p.x * p.x);
        let tr = neumann_trace(&quad).unwrap();
        assert!(tr.at(1, 0).abs() < 1e-12 && (tr.at(1, 1) - 2.0).abs() < 1e-12);

        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let s = SpaceTimeField::from_fn(unit_grid(n), tg, |p, _| (PI * p.x).sin());
                let tr = neumann_trace(&s).unwrap();
                (tr.at(0, 0) + PI).abs().max((tr.at(0, 1) + PI).abs())
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn rectangle_trace_of_linear_field() {
        let d = DomainSpec::rectangle(1.0f64, 2.0).unwrap();
        let g = build_grid(d, &[8, 16]).unwrap();
        let tg = TimeGrid::new(1.0, 1).unwrap();
        let f = SpaceTimeField::from_fn(g, tg, |p, _| 2.0 * p.x + 3.0 * p.y);
        let tr = neumann_trace(&f).unwrap();
        for (b, n) in tr.nodes().nodes().iter().enumerate() {
            let expected = 2.0 * n.normal.x + 3.0 * n.normal.y;
            assert!((tr.at(0, b) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn w_problem_trivial_cases() {
        let g = unit_grid(32);
        let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * p.x);
        let v = solve_linear_heat(&g, &phi, 64).unwrap();
        let rep = verify_w_problem(&v, &v, &NonlinearityFn::zero()).unwrap();
        assert_eq!(rep.interior_residual, 0.0);
        let u = solve_semilinear(&g, &NonlinearityFn::linear(1.0), &phi, 64, None).unwrap();
        let rep = verify_w_problem(&u, &v, &NonlinearityFn::linear(1.0)).unwrap();
        assert!(rep.boundary_deviation < 1e-12);
        assert_eq!(rep.initial_deviation, 0.0);
        let other = solve_linear_heat(&unit_grid(16), &phi, 64).unwrap();
        assert!(matches!(verify_w_problem(&u, &other, &NonlinearityFn::zero()), Err(Error::Input(_))));
    }

    #[test]
    fn rectangle_solver_reaches_harmonic_profile() {
        let d = DomainSpec::rectangle(1.0, 1.0).unwrap();
        let g = build_grid(d, &[16, 16]).unwrap();
        let phi = DirichletData::new(3.0, |p: Point<f64>, t: f64| (t / 0.1).min(1.0) * (1.0 + p.x + 2.0 * p.y));
        let v = solve_linear_heat(&g, &phi, 300).unwrap();
        let last = v.snapshot(300);
        for (k, p) in g.nodes().enumerate() {
            assert!((last[k] - (1.0 + p.x + 2.0 * p.y)).abs() < 1e-6);
        }
    }

    fn temporal_error(steps: usize) -> f64 {
        // u* = sin(πx) sin(3t), f(u) = u
        let g = unit_grid(64);
        let phi = DirichletData::zero(1.0);
        let src = |p: Point<f64>, t: f64| {
            ((1.0 + PI * PI) * (3.0 * t).sin() + 3.0 * (3.0 * t).cos()) * (PI * p.x).sin()
        };
        let fine = solve_semilinear(&g, &NonlinearityFn::linear(1.0), &phi, 4096, Some(&src)).unwrap();
        let u = solve_semilinear(&g, &NonlinearityFn::linear(1.0), &phi, steps, Some(&src)).unwrap();
        let stride = 4096 / steps;
        (0..=steps).fold(0.0f64, |m, j| {
            let e = u.snapshot(j).iter().zip(fine.snapshot(j * stride)).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            m.max(e)
        })
    }

    #[test]
    fn manufactured_temporal_rate() {
        let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&s| temporal_error(s)).collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    fn w_residual(n: usize, steps: usize) -> (f64, f64) {
        let g = unit_grid(n);
        let phi = DirichletData::new(1.0, |p: Point<f64>, t| t * p.x);
        let f = NonlinearityFn::linear(1.0);
        let u = solve_semilinear(&g, &f, &phi, steps, None).unwrap();
        let v = solve_linear_heat(&g, &phi, steps).unwrap();
        let full = verify_w_problem(&u, &v, &f).unwrap().interior_residual;
        let late = verify_w_problem_from(&u, &v, &f, 0.1).unwrap().interior_residual;
        (full, late)
    }

    #[test]
    fn w_problem_residual_refinement() {
        let res: Vec<(f64, f64)> = [(32, 128), (64, 256), (128, 512)].iter().map(|&(n, s)| w_residual(n, s)).collect();
        assert!(res[2].0 < 1e-2, "{res:?}");
        let errs: Vec<f64> = res.iter().map(|r| r.1).collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }
}
