//! Sampled space-time data: uniform time grids, fields on a spatial grid and
//! traces on boundary node sets.

use crate::domain::{BoundaryNodeSet, Point, Side, SpatialGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `steps + 1` uniform nodes covering `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub horizon: T,
    pub steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::config("time horizon must be positive"));
        }
        if steps == 0 {
            return Err(Error::config("time grid needs at least one step"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.steps)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, j: usize) -> T {
        if j == self.steps {
            self.horizon
        } else {
            self.dt() * T::from_usize_lossy(j)
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    /// Stride that maps this grid onto `coarser`, if the latter is a
    /// subsampling with the same horizon.
    pub fn subsample_stride(&self, coarser: &TimeGrid<T>) -> Option<usize> {
        let same_horizon = (self.horizon - coarser.horizon).abs() <= T::epsilon() * T::lit(16.0) * self.horizon;
        if same_horizon && coarser.steps > 0 && self.steps.is_multiple_of(coarser.steps) {
            Some(self.steps / coarser.steps)
        } else {
            None
        }
    }

    /// Index of the cell holding `t` and the linear weight of its right end.
    pub fn locate(&self, t: T) -> (usize, T) {
        let dt = self.dt();
        let pos = (t / dt).max(T::zero());
        let mut j = pos.floor().to_usize().unwrap_or(0);
        if j >= self.steps {
            j = self.steps - 1;
        }
        let theta = (t - self.time(j)) / dt;
        (j, theta.max(T::zero()).min(T::one()))
    }
}

/// Values on every node of a spatial grid at every node of a time grid,
/// stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField<T> {
    grid: SpatialGrid<T>,
    time: TimeGrid<T>,
    values: Vec<T>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn zeros(grid: SpatialGrid<T>, time: TimeGrid<T>) -> Self {
        let values = vec![T::zero(); grid.len() * time.len()];
        SpaceTimeField { grid, time, values }
    }

    pub fn from_fn<F: Fn(Point<T>, T) -> T>(grid: SpatialGrid<T>, time: TimeGrid<T>, f: F) -> Self {
        let mut field = Self::zeros(grid, time);
        for j in 0..time.len() {
            let t = time.time(j);
            let n = field.grid.len();
            for k in 0..n {
                let p = field.grid.node(k);
                field.values[j * n + k] = f(p, t);
            }
        }
        field
    }

    pub fn from_snapshots(grid: SpatialGrid<T>, time: TimeGrid<T>, snapshots: Vec<Vec<T>>) -> Result<Self> {
        if snapshots.len() != time.len() || snapshots.iter().any(|s| s.len() != grid.len()) {
            return Err(Error::input("snapshot shape does not match grids"));
        }
        let values = snapshots.into_iter().flatten().collect();
        Ok(SpaceTimeField { grid, time, values })
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn snapshot(&self, j: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn snapshot_mut(&mut self, j: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[j * n..(j + 1) * n]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        SpaceTimeField { grid: self.grid.clone(), time: self.time, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        if !self.grid.same_layout(&other.grid) || self.time != other.time {
            return Err(Error::input("fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SpaceTimeField { grid: self.grid.clone(), time: self.time, values })
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }
}

/// A scalar sampled on boundary nodes x time nodes (`values[j][b]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace<T> {
    nodes: BoundaryNodeSet<T>,
    time: TimeGrid<T>,
    values: Vec<Vec<T>>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn new(nodes: BoundaryNodeSet<T>, time: TimeGrid<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() != time.len() || values.iter().any(|row| row.len() != nodes.len()) {
            return Err(Error::input(format!(
                "trace shape mismatch: expected {} x {}",
                time.len(),
                nodes.len()
            )));
        }
        Ok(BoundaryTrace { nodes, time, values })
    }

    pub fn zeros(nodes: BoundaryNodeSet<T>, time: TimeGrid<T>) -> Self {
        let values = vec![vec![T::zero(); nodes.len()]; time.len()];
        BoundaryTrace { nodes, time, values }
    }

    pub fn from_fn<F: Fn(Point<T>, T) -> T>(nodes: BoundaryNodeSet<T>, time: TimeGrid<T>, f: F) -> Self {
        let values = (0..time.len())
            .map(|j| nodes.nodes().iter().map(|n| f(n.point, time.time(j))).collect())
            .collect();
        BoundaryTrace { nodes, time, values }
    }

    pub fn nodes(&self) -> &BoundaryNodeSet<T> {
        &self.nodes
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn at(&self, j: usize, b: usize) -> T {
        self.values[j][b]
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.values[j]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.values
    }

    /// Time series of one node.
    pub fn node_series(&self, b: usize) -> Vec<T> {
        self.values.iter().map(|row| row[b]).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().flatten().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        let values = self.values.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect();
        BoundaryTrace { nodes: self.nodes.clone(), time: self.time, values }
    }

    pub fn shares_layout(&self, other: &Self) -> bool {
        self.nodes.same_layout(&other.nodes) && self.time == other.time
    }

    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        if !self.shares_layout(other) {
            return Err(Error::input("traces do not share node set and time grid"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(BoundaryTrace { nodes: self.nodes.clone(), time: self.time, values })
    }

    /// Linear interpolation in time of node `b`'s series.
    pub fn value_at_time(&self, b: usize, t: T) -> T {
        let (j, theta) = self.time.locate(t);
        self.values[j][b] * (T::one() - theta) + self.values[j + 1][b] * theta
    }

    /// Piecewise-linear interpolation along the side of `p` (constant beyond
    /// the outermost nodes) and linear in time. On the interval this picks
    /// the endpoint node.
    pub fn interpolate(&self, side: Side, tangential: T, t: T) -> T {
        let idx = self.nodes.side_indices(side);
        if idx.is_empty() {
            return T::zero();
        }
        if idx.len() == 1 {
            return self.value_at_time(idx[0], t);
        }
        let axis = side.tangent_axis();
        let coord = |k: usize| self.nodes.nodes()[idx[k]].point.coord(axis);
        if tangential <= coord(0) {
            return self.value_at_time(idx[0], t);
        }
        let last = idx.len() - 1;
        if tangential >= coord(last) {
            return self.value_at_time(idx[last], t);
        }
        let mut k = 0;
        while k + 1 < last && coord(k + 1) < tangential {
            k += 1;
        }
        let (a, b) = (coord(k), coord(k + 1));
        let w = (tangential - a) / (b - a);
        self.value_at_time(idx[k], t) * (T::one() - w) + self.value_at_time(idx[k + 1], t) * w
    }

    /// Keeps every `stride`-th time sample.
    pub fn subsample_time(&self, coarse: TimeGrid<T>) -> Result<Self> {
        let stride = self
            .time
            .subsample_stride(&coarse)
            .ok_or_else(|| Error::input("coarse time grid is not a subsampling of the trace's grid"))?;
        let values = (0..coarse.len()).map(|j| self.values[j * stride].clone()).collect();
        Ok(BoundaryTrace { nodes: self.nodes.clone(), time: coarse, values })
    }

    /// Resamples onto another node set of the same domain (linear along each
    /// side).
    pub fn resample_nodes(&self, target: &BoundaryNodeSet<T>) -> Result<Self> {
        if self.nodes.domain() != target.domain() {
            return Err(Error::input("node sets live on different domains"));
        }
        let values = (0..self.time.len())
            .map(|j| {
                let t = self.time.time(j);
                target
                    .nodes()
                    .iter()
                    .map(|n| {
                        let tan = n.point.coord(n.side.tangent_axis());
                        if self.nodes.side_indices(n.side).len() == 1 {
                            self.values[j][self.nodes.side_indices(n.side)[0]]
                        } else {
                            self.interpolate(n.side, tan, t)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(BoundaryTrace { nodes: target.clone(), time: self.time, values })
    }
}
