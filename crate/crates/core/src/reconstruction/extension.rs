//! Extensions of the boundary functional `a(x, t)` into the domain.

use serde::{Deserialize, Serialize};

use crate::domain::{Point, Side, SpatialGrid};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, SpaceTimeField};
use crate::linalg::conjugate_gradient;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionMethod {
    /// Per time node, the discrete harmonic function with the boundary
    /// values of `a`.
    Harmonic,
    /// Constant along the inward normal of the nearest side, blended
    /// smoothly where two sides are about equally near.
    NormalConstant,
}

impl ExtensionMethod {
    pub fn name(self) -> &'static str {
        match self {
            ExtensionMethod::Harmonic => "harmonic",
            ExtensionMethod::NormalConstant => "normal_constant",
        }
    }

    pub fn other(self) -> Self {
        match self {
            ExtensionMethod::Harmonic => ExtensionMethod::NormalConstant,
            ExtensionMethod::NormalConstant => ExtensionMethod::Harmonic,
        }
    }
}

impl std::str::FromStr for ExtensionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(ExtensionMethod::Harmonic),
            "normal_constant" => Ok(ExtensionMethod::NormalConstant),
            other => Err(Error::config(format!("unknown extension method {other:?}"))),
        }
    }
}

/// `3s² - 2s³` on `[0, 1]`.
fn smoothstep<T: Real>(s: T) -> T {
    let s = s.max(T::zero()).min(T::one());
    s * s * (T::lit(3.0) - T::lit(2.0) * s)
}

/// Extends `a` into `grid` at every time node of the trace.
pub fn extend_a<T: Real>(a: &BoundaryTrace<T>, method: ExtensionMethod, grid: &SpatialGrid<T>) -> Result<SpaceTimeField<T>> {
    if a.nodes().domain() != grid.domain() {
        return Err(Error::input("trace and grid live on different domains"));
    }
    let time = *a.time_grid();
    let snapshots = if grid.dim() == 1 {
        (0..time.len()).map(|j| extend_interval(a.row(j), method, grid)).collect()
    } else {
        let mut laplace = LaplaceSolver::new(grid);
        (0..time.len())
            .map(|j| {
                let t = time.time(j);
                let side_value = |side: Side, p: Point<T>| a.interpolate(side, p.coord(side.tangent_axis()), t);
                match method {
                    ExtensionMethod::Harmonic => laplace.solve(&side_value),
                    ExtensionMethod::NormalConstant => Ok(extend_normal_rectangle(grid, &side_value)),
                }
            })
            .collect::<Result<Vec<_>>>()?
    };
    SpaceTimeField::from_snapshots(grid.clone(), time, snapshots)
}

fn extend_interval<T: Real>(row: &[T], method: ExtensionMethod, grid: &SpatialGrid<T>) -> Vec<T> {
    let (left, right) = (row[0], row[1]);
    let length = grid.domain().length(0);
    grid.nodes()
        .map(|p| {
            let s = p.x / length;
            let w = match method {
                ExtensionMethod::Harmonic => s,
                // blend over the middle fifth
                ExtensionMethod::NormalConstant => smoothstep((s - T::lit(0.4)) / T::lit(0.2)),
            };
            left * (T::one() - w) + right * w
        })
        .collect()
}

/// Sides of the rectangle with the distance from `p`, nearest first.
fn nearest_sides<T: Real>(p: Point<T>, lx: T, ly: T) -> [(T, Side); 4] {
    let mut d = [(p.y, Side::Bottom), (lx - p.x, Side::Right), (ly - p.y, Side::Top), (p.x, Side::Left)];
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    d
}

fn extend_normal_rectangle<T: Real>(grid: &SpatialGrid<T>, side_value: &dyn Fn(Side, Point<T>) -> T) -> Vec<T> {
    let lengths = grid.domain().lengths();
    let (lx, ly) = (lengths[0], lengths[1]);
    let delta = T::lit(0.2) * lx.min(ly);
    let half = T::lit(0.5);
    grid.nodes()
        .map(|p| {
            let sides = nearest_sides(p, lx, ly);
            let (d1, s1) = sides[0];
            let (d2, s2) = sides[1];
            if d2 <= T::zero() {
                // corner
                return half * (side_value(s1, p) + side_value(s2, p));
            }
            let r = (d2 - d1) / delta.min(d2);
            let w1 = half + half * smoothstep(r);
            w1 * side_value(s1, p) + (T::one() - w1) * side_value(s2, p)
        })
        .collect()
}

/// Dirichlet problem for the 5-point Laplacian by conjugate gradients,
/// warm-started from the previous solution.
struct LaplaceSolver<'g, T> {
    grid: &'g SpatialGrid<T>,
    interior: Vec<usize>,
    slot: Vec<Option<usize>>,
    previous: Vec<T>,
}

impl<'g, T: Real> LaplaceSolver<'g, T> {
    fn new(grid: &'g SpatialGrid<T>) -> Self {
        let interior = grid.interior_indices();
        let mut slot = vec![None; grid.len()];
        for (s, &k) in interior.iter().enumerate() {
            slot[k] = Some(s);
        }
        let previous = vec![T::zero(); interior.len()];
        LaplaceSolver { grid, interior, slot, previous }
    }

    fn boundary_values(&self, side_value: &dyn Fn(Side, Point<T>) -> T) -> Vec<T> {
        let grid = self.grid;
        let lengths = grid.domain().lengths();
        let tol = T::epsilon() * T::lit(1e3);
        let mut u = vec![T::zero(); grid.len()];
        for k in 0..grid.len() {
            if !grid.is_boundary(k) {
                continue;
            }
            let p = grid.node(k);
            let mut sides = Vec::with_capacity(2);
            if p.y.abs() <= tol {
                sides.push(Side::Bottom);
            }
            if (p.y - lengths[1]).abs() <= tol {
                sides.push(Side::Top);
            }
            if p.x.abs() <= tol {
                sides.push(Side::Left);
            }
            if (p.x - lengths[0]).abs() <= tol {
                sides.push(Side::Right);
            }
            let sum: T = sides.iter().map(|&s| side_value(s, p)).sum();
            u[k] = sum / T::from_usize_lossy(sides.len());
        }
        u
    }

    fn solve(&mut self, side_value: &dyn Fn(Side, Point<T>) -> T) -> Result<Vec<T>> {
        let grid = self.grid;
        let mut u = self.boundary_values(side_value);
        let (hx, hy) = (grid.spacing(0), grid.spacing(1));
        let (cx, cy) = (T::one() / (hx * hx), T::one() / (hy * hy));
        let two = T::lit(2.0);
        let nx = grid.cells(0);
        let stride = nx + 1;
        // -Δ_h restricted to the interior, boundary values moved to the rhs
        let mut rhs = vec![T::zero(); self.interior.len()];
        for (s, &k) in self.interior.iter().enumerate() {
            for (nb, c) in [(k - 1, cx), (k + 1, cx), (k - stride, cy), (k + stride, cy)] {
                if self.slot[nb].is_none() {
                    rhs[s] = rhs[s] + c * u[nb];
                }
            }
        }
        let slot = &self.slot;
        let interior = &self.interior;
        let apply = |x: &[T], out: &mut [T]| {
            for (s, &k) in interior.iter().enumerate() {
                let mut acc = two * (cx + cy) * x[s];
                for (nb, c) in [(k - 1, cx), (k + 1, cx), (k - stride, cy), (k + stride, cy)] {
                    if let Some(q) = slot[nb] {
                        acc = acc - c * x[q];
                    }
                }
                out[s] = acc;
            }
        };
        let mut x = self.previous.clone();
        let max_iter = 20 * x.len() + 100;
        let tol = T::epsilon().sqrt() * T::lit(1e-4);
        let stats = conjugate_gradient(apply, &rhs, &mut x, tol.max(T::epsilon() * T::lit(64.0)), max_iter);
        if !stats.converged {
            return Err(Error::Numerical {
                message: format!("Laplace solve did not converge (residual {})", stats.relative_residual.to_f64_lossy()),
                step: stats.iterations,
                time: 0.0,
            });
        }
        for (s, &k) in self.interior.iter().enumerate() {
            u[k] = x[s];
        }
        self.previous = x;
        Ok(u)
    }
}
