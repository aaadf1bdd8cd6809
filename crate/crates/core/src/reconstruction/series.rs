//! Modal coefficients `a_k(t)` of the extended field, their regularized
//! time derivatives, and the boundary series `Σ (a'_k + λ_k a_k) ω_k`.

use crate::domain::{Point, SpatialGrid};
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimeGrid};
use crate::forward::NonlinearityFn;
use crate::quadrature::exp_convolve;
use crate::scalar::{dot, Real};

/// `a_k(t_j)` for `k = 1..=K`, stored mode-major, with optional time
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries<T> {
    time: TimeGrid<T>,
    eigenvalues: Vec<T>,
    values: Vec<Vec<T>>,
    derivatives: Option<Vec<Vec<T>>>,
    under_resolved: bool,
}

impl<T: Real> CoefficientSeries<T> {
    pub fn new(time: TimeGrid<T>, eigenvalues: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() != eigenvalues.len() || values.iter().any(|v| v.len() != time.len()) {
            return Err(Error::input("coefficient array does not match mode count and time grid"));
        }
        Ok(CoefficientSeries { time, eigenvalues, values, derivatives: None, under_resolved: false })
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn mode_count(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Series of mode `k` (1-based).
    pub fn values(&self, k: usize) -> &[T] {
        &self.values[k - 1]
    }

    pub fn derivatives(&self, k: usize) -> Option<&[T]> {
        self.derivatives.as_ref().map(|d| d[k - 1].as_slice())
    }

    pub fn has_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    /// Whether the projection grid resolves every mode of the series.
    pub fn under_resolved(&self) -> bool {
        self.under_resolved
    }

    /// `c_k(t_j) = a'_k(t_j) + λ_k a_k(t_j)`.
    pub fn volterra_sources(&self) -> Result<Vec<Vec<T>>> {
        let d = self
            .derivatives
            .as_ref()
            .ok_or_else(|| Error::input("coefficient series has no derivatives"))?;
        Ok(self
            .values
            .iter()
            .zip(d)
            .zip(&self.eigenvalues)
            .map(|((a, da), &lambda)| a.iter().zip(da).map(|(&v, &dv)| dv + lambda * v).collect())
            .collect())
    }

    /// `Σ_j a_k(t_j)² dt` per mode, trapezoid in time.
    pub fn mode_energies(&self) -> Vec<T> {
        let dt = self.time.dt();
        let half = T::lit(0.5);
        self.values
            .iter()
            .map(|a| {
                let n = a.len();
                let ends = half * (a[0] * a[0] + a[n - 1] * a[n - 1]);
                (a.iter().map(|&v| v * v).sum::<T>() - ends) * dt
            })
            .collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        let scale = |v: &Vec<Vec<T>>| v.iter().map(|r| r.iter().map(|&x| x * factor).collect()).collect();
        CoefficientSeries {
            time: self.time,
            eigenvalues: self.eigenvalues.clone(),
            values: scale(&self.values),
            derivatives: self.derivatives.as_ref().map(scale),
            under_resolved: self.under_resolved,
        }
    }
}

/// `a_k(t_j) = (ã(·, t_j), ω_k)` by trapezoid quadrature for `k ≤ K`.
pub fn project_coefficients<T: Real>(
    field: &SpaceTimeField<T>,
    basis: &EigenBasis<T>,
    modes: usize,
) -> Result<CoefficientSeries<T>> {
    let grid: &SpatialGrid<T> = field.grid();
    if grid.domain() != basis.domain() {
        return Err(Error::input("field and eigenbasis live on different domains"));
    }
    if modes == 0 || modes > basis.len() {
        return Err(Error::config(format!("mode count {modes} outside 1..={}", basis.len())));
    }
    let basis = basis.truncated(modes);
    let weights = grid.weights();
    let time = *field.time_grid();
    let mut values = Vec::with_capacity(modes);
    for mode in basis.modes() {
        let weighted: Vec<T> = grid.nodes().zip(weights).map(|(p, &w)| w * mode.eval(p)).collect();
        values.push((0..time.len()).map(|j| dot(&weighted, field.snapshot(j))).collect());
    }
    let mut series = CoefficientSeries::new(time, basis.eigenvalues(), values)?;
    series.under_resolved = !basis.resolved_on(grid);
    Ok(series)
}

/// Weights `c` such that `Σ c_i y(o_i)` is the slope at offset 0 of the
/// least-squares quadratic through `(o_i, y_i)`.
fn quadratic_slope_weights(offsets: &[f64]) -> Vec<f64> {
    // normal equations M c = V^T y with M = V^T V, V rows (1, o, o²)
    let mut m = [[0.0f64; 3]; 3];
    for &o in offsets {
        let row = [1.0, o, o * o];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += row[r] * row[c];
            }
        }
    }
    let inv = invert3(m);
    // slope = second row of M^{-1} V^T
    offsets.iter().map(|&o| inv[1][0] + inv[1][1] * o + inv[1][2] * o * o).collect()
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    inv
}

/// Savitzky–Golay derivative of a uniformly sampled series: quadratic
/// least squares over `2w + 1` samples, shifted to one side at the ends.
pub fn savitzky_golay_derivative<T: Real>(y: &[T], dt: T, half_width: usize) -> Result<Vec<T>> {
    let width = 2 * half_width + 1;
    if half_width == 0 || y.len() < width {
        return Err(Error::config(format!(
            "differentiation window 2w+1 = {width} needs w >= 1 and at most {} samples",
            y.len()
        )));
    }
    let n = y.len();
    let w = half_width as isize;
    let weights_at = |shift: isize| -> Vec<T> {
        let offsets: Vec<f64> = (0..width as isize).map(|i| (i - w - shift) as f64).collect();
        quadratic_slope_weights(&offsets).into_iter().map(T::lit).collect()
    };
    let centre = weights_at(0);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let (start, weights) = if j < half_width {
            (0, weights_at(j as isize - w))
        } else if j + half_width >= n {
            (n - width, weights_at(j as isize - (n - width) as isize - w))
        } else {
            (j - half_width, centre.clone())
        };
        let s: T = weights.iter().zip(&y[start..start + width]).map(|(&c, &v)| c * v).sum();
        out.push(s / dt);
    }
    Ok(out)
}

/// Fills `a'_k` with [`savitzky_golay_derivative`] (degree 2).
pub fn differentiate_coefficients<T: Real>(
    series: &CoefficientSeries<T>,
    half_width: usize,
    degree: usize,
) -> Result<CoefficientSeries<T>> {
    if degree != 2 {
        return Err(Error::config(format!("only quadratic local fits are supported, got degree {degree}")));
    }
    let dt = series.time.dt();
    let derivatives = series
        .values
        .iter()
        .map(|a| savitzky_golay_derivative(a, dt, half_width))
        .collect::<Result<Vec<_>>>()?;
    let mut out = series.clone();
    out.derivatives = Some(derivatives);
    Ok(out)
}

/// `F(x, t_j) = Σ_{k ≤ K} (a'_k(t_j) + λ_k a_k(t_j)) ω_k(x)`.
pub fn assemble_at_node<T: Real>(series: &CoefficientSeries<T>, basis: &EigenBasis<T>, x: Point<T>, j: usize) -> Result<T> {
    let d = series
        .derivatives
        .as_ref()
        .ok_or_else(|| Error::input("assemble needs differentiated coefficients"))?;
    if series.mode_count() > basis.len() {
        return Err(Error::input("series has more modes than the basis"));
    }
    Ok((0..series.mode_count())
        .map(|k| (d[k][j] + series.eigenvalues[k] * series.values[k][j]) * basis.modes()[k].eval(x))
        .sum())
}

/// [`assemble_at_node`] at any `s` in the time window, linear between nodes.
pub fn assemble_series<T: Real>(series: &CoefficientSeries<T>, basis: &EigenBasis<T>, x: Point<T>, s: T) -> Result<T> {
    let time = series.time;
    if s < T::zero() || s > time.horizon * (T::one() + T::epsilon() * T::lit(16.0)) {
        return Err(Error::input(format!("s = {s} outside [0, {}]", time.horizon)));
    }
    let (j, theta) = time.locate(s.min(time.horizon));
    let lo = assemble_at_node(series, basis, x, j)?;
    if theta == T::zero() {
        return Ok(lo);
    }
    let hi = assemble_at_node(series, basis, x, j + 1)?;
    Ok(lo * (T::one() - theta) + hi * theta)
}

/// Ground-truth Volterra data: `c_k(s) = (f(u_f(·, s)), ω_k)` and
/// `p_k(t) = ∫_0^t e^{-λ_k (t - s)} c_k(s) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraOracle<T> {
    pub sources: Vec<Vec<T>>,
    /// The `p_k` as a coefficient series (no derivatives).
    pub series: CoefficientSeries<T>,
}

pub fn oracle_volterra<T: Real>(
    u_f: &SpaceTimeField<T>,
    f: &NonlinearityFn<T>,
    basis: &EigenBasis<T>,
    modes: usize,
) -> Result<VolterraOracle<T>> {
    let reaction = u_f.map(|u| f.value(u));
    let projected = project_coefficients(&reaction, basis, modes)?;
    let dt = projected.time.dt();
    let sources = projected.values.clone();
    let p = sources
        .iter()
        .zip(&projected.eigenvalues)
        .map(|(c, &lambda)| exp_convolve(lambda, dt, c))
        .collect();
    let mut series = CoefficientSeries::new(projected.time, projected.eigenvalues.clone(), p)?;
    series.under_resolved = projected.under_resolved;
    Ok(VolterraOracle { sources, series })
}
