//! Geometry: the interval and the rectangle, uniform grids over their
//! closure, and boundary node sets for surface quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest number of cells per axis accepted by [`build_grid`].
pub const MIN_GRID_CELLS: usize = 2;

/// Resolution below which solvers and trace stencils refuse a grid.
pub const MIN_RESOLVED_CELLS: usize = 8;

/// A point of the closed domain. On the interval `y` is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn on_line(x: T) -> Self {
        Point { x, y: T::zero() }
    }

    pub fn coord(&self, axis: usize) -> T {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// `(0, L)` or `(0, Lx) x (0, Ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec<T> {
    Interval { length: T },
    Rectangle { lx: T, ly: T },
}

impl<T: Real> DomainSpec<T> {
    pub fn interval(length: T) -> Result<Self> {
        let d = DomainSpec::Interval { length };
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(lx: T, ly: T) -> Result<Self> {
        let d = DomainSpec::Rectangle { lx, ly };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lengths().iter().all(|&l| l > T::zero() && l.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("domain lengths must be finite and positive: {:?}", self)))
        }
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            DomainSpec::Interval { .. } => DomainKind::Interval,
            DomainSpec::Rectangle { .. } => DomainKind::Rectangle,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } => 2,
        }
    }

    /// Side lengths, one per axis.
    pub fn lengths(&self) -> Vec<T> {
        match *self {
            DomainSpec::Interval { length } => vec![length],
            DomainSpec::Rectangle { lx, ly } => vec![lx, ly],
        }
    }

    pub fn length(&self, axis: usize) -> T {
        self.lengths()[axis]
    }

    /// |Ω|.
    pub fn volume(&self) -> T {
        self.lengths().into_iter().fold(T::one(), |acc, l| acc * l)
    }

    /// |∂Ω|: 2 for the interval (counting measure), the perimeter otherwise.
    pub fn boundary_measure(&self) -> T {
        match *self {
            DomainSpec::Interval { .. } => T::lit(2.0),
            DomainSpec::Rectangle { lx, ly } => T::lit(2.0) * (lx + ly),
        }
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        let tol = T::epsilon() * T::lit(64.0);
        match *self {
            DomainSpec::Interval { length } => p.x >= -tol && p.x <= length + tol,
            DomainSpec::Rectangle { lx, ly } => {
                p.x >= -tol && p.x <= lx + tol && p.y >= -tol && p.y <= ly + tol
            }
        }
    }
}

/// Uniform grid over the closure of the domain with trapezoid weights.
///
/// Node `(i, j)` has flat index `i + (nx + 1) * j`; on the interval `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid<T> {
    domain: DomainSpec<T>,
    cells: [usize; 2],
    spacing: [T; 2],
    weights: Vec<T>,
}

/// Builds the uniform grid with `n[axis]` cells per axis. Only the first
/// entry of `n` is read on the interval.
pub fn build_grid<T: Real>(domain: DomainSpec<T>, n: &[usize]) -> Result<SpatialGrid<T>> {
    domain.validate()?;
    let dim = domain.dim();
    if n.len() < dim {
        return Err(Error::config(format!("need {dim} cell counts, got {}", n.len())));
    }
    if let Some(&bad) = n[..dim].iter().find(|&&c| c < MIN_GRID_CELLS) {
        return Err(Error::config(format!(
            "grid needs at least {MIN_GRID_CELLS} cells per axis, got {bad}"
        )));
    }
    let lengths = domain.lengths();
    let nx = n[0];
    let ny = if dim == 2 { n[1] } else { 0 };
    let hx = lengths[0] / T::from_usize_lossy(nx);
    let hy = if dim == 2 { lengths[1] / T::from_usize_lossy(ny) } else { T::one() };

    let axis_weights = |cells: usize, h: T| -> Vec<T> {
        let half = h / T::lit(2.0);
        (0..=cells).map(|i| if i == 0 || i == cells { half } else { h }).collect()
    };
    let wx = axis_weights(nx, hx);
    let weights = if dim == 2 {
        let wy = axis_weights(ny, hy);
        let mut w = Vec::with_capacity((nx + 1) * (ny + 1));
        for &b in &wy {
            w.extend(wx.iter().map(|&a| a * b));
        }
        w
    } else {
        wx
    };
    Ok(SpatialGrid { domain, cells: [nx, ny], spacing: [hx, hy], weights })
}

impl<T: Real> SpatialGrid<T> {
    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Cells along `axis`.
    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.spacing[axis]
    }

    /// Nodes along `axis`, boundary included.
    pub fn points_along(&self, axis: usize) -> usize {
        if axis >= self.dim() {
            1
        } else {
            self.cells[axis] + 1
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.cells[0] + 1) * j
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        let stride = self.cells[0] + 1;
        (idx % stride, idx / stride)
    }

    pub fn node(&self, idx: usize) -> Point<T> {
        let (i, j) = self.ij(idx);
        Point::new(
            self.spacing[0] * T::from_usize_lossy(i),
            if self.dim() == 2 { self.spacing[1] * T::from_usize_lossy(j) } else { T::zero() },
        )
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point<T>> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let edge_x = i == 0 || i == self.cells[0];
        if self.dim() == 1 {
            edge_x
        } else {
            edge_x || j == 0 || j == self.cells[1]
        }
    }

    /// Flat indices of the nodes strictly inside the domain.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<Point<T>> {
        self.interior_indices().into_iter().map(|k| self.node(k)).collect()
    }

    /// Trapezoid quadrature of nodal values.
    pub fn integrate(&self, values: &[T]) -> T {
        crate::scalar::dot(&self.weights, values)
    }

    pub fn sample<F: Fn(Point<T>) -> T>(&self, f: F) -> Vec<T> {
        self.nodes().map(f).collect()
    }

    /// Whether both grids cover the same domain with the same cells.
    pub fn same_layout(&self, other: &SpatialGrid<T>) -> bool {
        self.domain == other.domain && self.cells == other.cells
    }

    /// Applies the 3-point (1D) or 5-point (2D) Laplacian at an interior node.
    pub fn laplacian_at(&self, values: &[T], idx: usize) -> T {
        let (i, j) = self.ij(idx);
        let hx2 = self.spacing[0] * self.spacing[0];
        let c = values[idx];
        let two = T::lit(2.0);
        let mut lap = (values[self.index(i - 1, j)] - two * c + values[self.index(i + 1, j)]) / hx2;
        if self.dim() == 2 {
            let hy2 = self.spacing[1] * self.spacing[1];
            lap = lap + (values[self.index(i, j - 1)] - two * c + values[self.index(i, j + 1)]) / hy2;
        }
        lap
    }
}

/// Side of the domain a boundary node sits on. The interval uses `Left`
/// (x = 0) and `Right` (x = L).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Axis along which the outward normal points.
    pub fn normal_axis(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }

    /// Whether the side sits at coordinate 0 of its normal axis.
    pub fn at_origin(self) -> bool {
        matches!(self, Side::Left | Side::Bottom)
    }

    pub fn tangent_axis(self) -> usize {
        1 - self.normal_axis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode<T> {
    pub point: Point<T>,
    pub normal: Point<T>,
    /// dS weight. On the rectangle each node stands for a segment of this
    /// length centred at `point`.
    pub weight: T,
    pub side: Side,
}

impl<T: Real> BoundaryNode<T> {
    /// Endpoints of the segment along the tangent axis (rectangle only).
    pub fn segment(&self) -> (T, T) {
        let c = self.point.coord(self.side.tangent_axis());
        let half = self.weight / T::lit(2.0);
        (c - half, c + half)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNodeSet<T> {
    domain: DomainSpec<T>,
    per_side: usize,
    nodes: Vec<BoundaryNode<T>>,
}

/// Boundary quadrature nodes. The interval gets its two endpoints; the
/// rectangle gets `m` midpoint-rule nodes per side, corners excluded, in
/// the order bottom, right, top, left with increasing tangential coordinate.
pub fn boundary_nodes<T: Real>(domain: DomainSpec<T>, m: usize) -> Result<BoundaryNodeSet<T>> {
    domain.validate()?;
    let nodes = match domain {
        DomainSpec::Interval { length } => vec![
            BoundaryNode {
                point: Point::on_line(T::zero()),
                normal: Point::on_line(-T::one()),
                weight: T::one(),
                side: Side::Left,
            },
            BoundaryNode {
                point: Point::on_line(length),
                normal: Point::on_line(T::one()),
                weight: T::one(),
                side: Side::Right,
            },
        ],
        DomainSpec::Rectangle { lx, ly } => {
            if m < 4 {
                return Err(Error::config(format!("rectangle boundary needs m >= 4 per side, got {m}")));
            }
            let mut nodes = Vec::with_capacity(4 * m);
            for side in [Side::Bottom, Side::Right, Side::Top, Side::Left] {
                let (len, fixed) = match side {
                    Side::Bottom => (lx, T::zero()),
                    Side::Top => (lx, ly),
                    Side::Left => (ly, T::zero()),
                    Side::Right => (ly, lx),
                };
                let w = len / T::from_usize_lossy(m);
                let sign = if side.at_origin() { -T::one() } else { T::one() };
                for k in 0..m {
                    let c = w * (T::from_usize_lossy(k) + T::lit(0.5));
                    let (point, normal) = if side.normal_axis() == 0 {
                        (Point::new(fixed, c), Point::new(sign, T::zero()))
                    } else {
                        (Point::new(c, fixed), Point::new(T::zero(), sign))
                    };
                    nodes.push(BoundaryNode { point, normal, weight: w, side });
                }
            }
            nodes
        }
    };
    Ok(BoundaryNodeSet { domain, per_side: m, nodes })
}

impl<T: Real> BoundaryNodeSet<T> {
    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    /// Nodes per side on the rectangle; meaningless on the interval.
    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn nodes(&self) -> &[BoundaryNode<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn same_layout(&self, other: &BoundaryNodeSet<T>) -> bool {
        self.domain == other.domain && self.nodes.len() == other.nodes.len() && {
            let tol = T::epsilon() * T::lit(1e3);
            self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.side == b.side && (a.point.x - b.point.x).abs() <= tol && (a.point.y - b.point.y).abs() <= tol
            })
        }
    }

    /// Indices of the nodes on `side`, ordered by tangential coordinate.
    pub fn side_indices(&self, side: Side) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].side == side).collect()
    }
}
