//! The Neumann heat kernel `U(x, t; y, s)` and the boundary and domain
//! propagators built on it.
//!
//! For a time gap `τ = t - s` at or above the crossover the kernel is the
//! truncated eigenfunction sum `Σ e^{-λ_k τ} ω_k(x) ω_k(y)`. Below it the
//! per-axis Gaussian image sum is used; on the rectangle the kernel is the
//! product of the two 1D kernels.

use crate::domain::{BoundaryNode, BoundaryNodeSet, DomainSpec, Point, SpatialGrid};
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, SpaceTimeField, TimeGrid};
use crate::quadrature::{exp_cell_weights, exp_convolve, GaussLegendre};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T> {
    /// Number of eigenpairs available to the spectral branch.
    pub k_max: usize,
    /// Time gap below which the image sum is used. `None` picks the
    /// smallest gap for which the spectral tail is below `tail_tol` even at
    /// half the crossover.
    pub crossover: Option<T>,
    /// Reflections per side and axis in the image sum.
    pub image_count: usize,
    pub tail_tol: T,
    /// Gauss–Legendre points per time cell in the boundary propagator.
    pub gauss_points: usize,
}

impl<T: Real> Default for KernelConfig<T> {
    fn default() -> Self {
        KernelConfig { k_max: 200, crossover: None, image_count: 5, tail_tol: T::lit(1e-12), gauss_points: 8 }
    }
}

/// Cells near `τ = 0` get this many times the regular number of
/// Gauss–Legendre points.
const NEAR_FIELD_CELLS: usize = 4;
const NEAR_FIELD_FACTOR: usize = 3;

#[derive(Debug, Clone)]
pub struct KernelEvaluator<T> {
    basis: EigenBasis<T>,
    config: KernelConfig<T>,
    crossover: T,
    gl: GaussLegendre<T>,
    gl_near: GaussLegendre<T>,
}

impl<T: Real> KernelEvaluator<T> {
    pub fn new(domain: DomainSpec<T>, config: KernelConfig<T>) -> Result<Self> {
        if config.k_max < 2 {
            return Err(Error::config("kernel needs k_max >= 2"));
        }
        if !(config.tail_tol > T::zero() && config.tail_tol < T::one()) {
            return Err(Error::config("tail_tol must lie in (0, 1)"));
        }
        if config.gauss_points == 0 {
            return Err(Error::config("gauss_points must be positive"));
        }
        let basis = EigenBasis::new(domain, config.k_max)?;
        let lambda_max = basis.mode(config.k_max).eigenvalue;
        let log_tol = -config.tail_tol.ln();
        let crossover = match config.crossover {
            Some(eps) => {
                if !(eps > T::zero()) {
                    return Err(Error::config("crossover must be positive"));
                }
                if (-lambda_max * eps).exp() > config.tail_tol {
                    return Err(Error::config(format!(
                        "spectral tail e^(-λ_K ε) = {} exceeds tail_tol {} at crossover {}",
                        (-lambda_max * eps).exp(),
                        config.tail_tol,
                        eps
                    )));
                }
                eps
            }
            None => T::lit(2.0) * log_tol / lambda_max,
        };
        let gl = GaussLegendre::new(config.gauss_points);
        let gl_near = GaussLegendre::new(config.gauss_points * NEAR_FIELD_FACTOR);
        Ok(KernelEvaluator { basis, config, crossover, gl, gl_near })
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        self.basis.domain()
    }

    pub fn basis(&self) -> &EigenBasis<T> {
        &self.basis
    }

    pub fn config(&self) -> &KernelConfig<T> {
        &self.config
    }

    pub fn crossover(&self) -> T {
        self.crossover
    }

    fn check_gap(tau: T) -> Result<()> {
        if tau > T::zero() && tau.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("kernel needs a positive time gap, got {tau}")))
        }
    }

    /// `U(x, t; y, s)` with `τ = t - s`.
    pub fn value(&self, x: Point<T>, y: Point<T>, tau: T) -> Result<T> {
        Self::check_gap(tau)?;
        Ok(self.value_unchecked(x, y, tau))
    }

    fn value_unchecked(&self, x: Point<T>, y: Point<T>, tau: T) -> T {
        if tau >= self.crossover {
            self.spectral_value(x, y, tau)
        } else {
            self.image_value(x, y, tau)
        }
    }

    /// Truncated eigenfunction sum; terms stop once `e^{-λ_k τ}` drops below
    /// `tail_tol`.
    pub fn spectral_value(&self, x: Point<T>, y: Point<T>, tau: T) -> T {
        let mut sum = T::zero();
        for m in self.basis.modes() {
            let decay = (-m.eigenvalue * tau).exp();
            if decay < self.config.tail_tol {
                break;
            }
            sum = sum + decay * m.eval(x) * m.eval(y);
        }
        sum
    }

    /// Method-of-images form.
    pub fn image_value(&self, x: Point<T>, y: Point<T>, tau: T) -> T {
        let lengths = self.domain().lengths();
        let n = self.config.image_count;
        let mut v = images_1d(x.x, y.x, tau, lengths[0], n);
        if lengths.len() == 2 {
            v = v * images_1d(x.y, y.y, tau, lengths[1], n);
        }
        v
    }

    /// `∫_Ω U(x, t; y, s) dy` by trapezoid quadrature on `grid`.
    pub fn mass(&self, grid: &SpatialGrid<T>, x: Point<T>, tau: T) -> Result<T> {
        Self::check_gap(tau)?;
        if grid.domain() != self.domain() {
            return Err(Error::input("grid does not cover the kernel's domain"));
        }
        Ok(grid.nodes().zip(grid.weights()).map(|(y, &w)| w * self.value_unchecked(x, y, tau)).sum())
    }

    /// `∫_e U(x, t; y, s) dS(y)` over boundary element `e`: a point
    /// evaluation on the interval, an exact segment integral on the
    /// rectangle.
    pub fn element_value(&self, x: Point<T>, element: &BoundaryNode<T>, tau: T) -> T {
        let lengths = self.domain().lengths();
        if lengths.len() == 1 {
            return self.value_unchecked(x, element.point, tau);
        }
        let side = element.side;
        let (a, b) = element.segment();
        let n_axis = side.normal_axis();
        let t_axis = side.tangent_axis();
        let fixed = element.point.coord(n_axis);
        if tau >= self.crossover {
            let mut sum = T::zero();
            for m in self.basis.modes() {
                let decay = (-m.eigenvalue * tau).exp();
                if decay < self.config.tail_tol {
                    break;
                }
                sum = sum + decay * m.eval(x) * m.side_integral(side, a, b);
            }
            sum
        } else {
            let n = self.config.image_count;
            images_1d(x.coord(n_axis), fixed, tau, lengths[n_axis], n)
                * images_1d_segment(x.coord(t_axis), a, b, tau, lengths[t_axis], n)
        }
    }

    /// `∫_0^t ∫_∂Ω U(x, t; y, s) g(y, s) dS(y) ds` at a single point.
    ///
    /// `g` is linear in time between its samples. Each time cell is mapped
    /// to `σ = √(t - s)` and integrated with Gauss–Legendre, which removes
    /// the `(t - s)^{-1/2}` singularity for `x` on the boundary.
    pub fn boundary_propagate(&self, g: &BoundaryTrace<T>, x: Point<T>, t: T) -> Result<T> {
        self.check_trace(g)?;
        let tg = g.time_grid();
        if t > tg.horizon * (T::one() + T::epsilon() * T::lit(16.0)) {
            return Err(Error::input(format!("trace covers [0, {}] but t = {t}", tg.horizon)));
        }
        if t <= T::zero() {
            return Ok(T::zero());
        }
        let t = t.min(tg.horizon);
        let dt = tg.dt();
        let nodes = g.nodes().nodes();
        let two = T::lit(2.0);
        let mut total = T::zero();
        let mut i = 0;
        while i < tg.steps && tg.time(i) < t {
            let s_lo = tg.time(i);
            let s_hi = tg.time(i + 1).min(t);
            let sig_lo = (t - s_hi).max(T::zero()).sqrt();
            let sig_hi = (t - s_lo).sqrt();
            let near = t - s_hi < dt * T::from_usize_lossy(NEAR_FIELD_CELLS);
            let rule = if near { &self.gl_near } else { &self.gl };
            for (sigma, w) in rule.mapped(sig_lo, sig_hi) {
                let tau = sigma * sigma;
                if tau <= T::zero() {
                    continue;
                }
                let s = t - tau;
                let theta = ((s - s_lo) / dt).max(T::zero()).min(T::one());
                let mut inner = T::zero();
                for (b, node) in nodes.iter().enumerate() {
                    let gv = g.at(i, b) * (T::one() - theta) + g.at(i + 1, b) * theta;
                    if gv != T::zero() {
                        inner = inner + gv * self.element_value(x, node, tau);
                    }
                }
                total = total + w * two * sigma * inner;
            }
            i += 1;
        }
        Ok(total)
    }

    /// [`Self::boundary_propagate`] at every target node and every time node
    /// of `g`, using convolution weights that depend only on `t_j - t_i`.
    pub fn boundary_propagate_trace(&self, g: &BoundaryTrace<T>, targets: &BoundaryNodeSet<T>) -> Result<BoundaryTrace<T>> {
        self.check_trace(g)?;
        if targets.domain() != self.domain() {
            return Err(Error::input("target nodes do not lie on the kernel's domain"));
        }
        let tg = *g.time_grid();
        let steps = tg.steps;
        let sources = g.nodes().nodes();
        let mut out = vec![vec![T::zero(); targets.len()]; tg.len()];
        for (b, target) in targets.nodes().iter().enumerate() {
            for (e, source) in sources.iter().enumerate() {
                let series = g.node_series(e);
                if series.iter().all(|&v| v == T::zero()) {
                    continue;
                }
                let (rise, fall) = self.cell_moments(target.point, source, &tg);
                // weight of g(t_i) in the value at t_j, by lag m = j - i
                for j in 1..=steps {
                    let mut acc = fall[0] * series[j] + rise[j - 1] * series[0];
                    for i in 1..j {
                        let m = j - i;
                        acc = acc + (rise[m - 1] + fall[m]) * series[i];
                    }
                    out[j][b] = out[j][b] + acc;
                }
            }
        }
        BoundaryTrace::new(targets.clone(), tg, out)
    }

    /// Per time cell `c` (gap `τ ∈ [c dt, (c+1) dt]`), the integrals of the
    /// element kernel against the rising and falling linear hats.
    fn cell_moments(&self, x: Point<T>, element: &BoundaryNode<T>, tg: &TimeGrid<T>) -> (Vec<T>, Vec<T>) {
        let dt = tg.dt();
        let two = T::lit(2.0);
        let mut rise = Vec::with_capacity(tg.steps);
        let mut fall = Vec::with_capacity(tg.steps);
        for c in 0..tg.steps {
            let tau_lo = dt * T::from_usize_lossy(c);
            let tau_hi = dt * T::from_usize_lossy(c + 1);
            let rule = if c < NEAR_FIELD_CELLS { &self.gl_near } else { &self.gl };
            let (mut r, mut f) = (T::zero(), T::zero());
            for (sigma, w) in rule.mapped(tau_lo.sqrt(), tau_hi.sqrt()) {
                let tau = sigma * sigma;
                if tau <= T::zero() {
                    continue;
                }
                let theta = ((tau - tau_lo) / dt).max(T::zero()).min(T::one());
                let k = w * two * sigma * self.element_value(x, element, tau);
                r = r + k * theta;
                f = f + k * (T::one() - theta);
            }
            rise.push(r);
            fall.push(f);
        }
        (rise, fall)
    }

    fn check_trace(&self, g: &BoundaryTrace<T>) -> Result<()> {
        if g.nodes().domain() != self.domain() {
            return Err(Error::input("trace does not live on the kernel's domain"));
        }
        Ok(())
    }

    /// Modes usable on `grid`: every per-axis index strictly below the cell
    /// count, so the trapezoid projection is an exact discrete transform.
    fn modes_on(&self, grid: &SpatialGrid<T>) -> Vec<usize> {
        let dim = grid.dim();
        (0..self.basis.len())
            .filter(|&k| {
                let m = self.basis.modes()[k];
                (0..dim).all(|a| m.index[a] < grid.cells(a))
            })
            .collect()
    }

    /// Spectral form of `∫_0^t ∫_Ω U(x, t; y, s) h(y, s) dy ds` for a field
    /// on a grid: every `h(·, s_j)` is projected on the modes, each modal
    /// series is convolved exactly with `e^{-λ_k τ}`.
    pub fn domain_potential(&self, h: &SpaceTimeField<T>) -> Result<DomainPotential<T>> {
        let grid = h.grid();
        if grid.domain() != self.domain() {
            return Err(Error::input("field grid does not cover the kernel's domain"));
        }
        let tg = *h.time_grid();
        let modes = self.modes_on(grid);
        let w = grid.weights();
        let mut sources = Vec::with_capacity(modes.len());
        let mut potentials = Vec::with_capacity(modes.len());
        for &k in &modes {
            let mode = self.basis.modes()[k];
            let samples: Vec<T> = grid.nodes().zip(w).map(|(p, &wi)| wi * mode.eval(p)).collect();
            let c: Vec<T> = (0..tg.len()).map(|j| crate::scalar::dot(&samples, h.snapshot(j))).collect();
            potentials.push(exp_convolve(mode.eigenvalue, tg.dt(), &c));
            sources.push(c);
        }
        Ok(DomainPotential { basis: self.basis.clone(), modes, time: tg, sources, potentials })
    }

    /// `∫_0^t ∫_Ω U(x, t; y, s) h(y, s) dy ds` at one point.
    pub fn domain_propagate(&self, h: &SpaceTimeField<T>, x: Point<T>, t: T) -> Result<T> {
        self.domain_potential(h)?.eval(x, t)
    }
}

/// Modal representation of a domain potential, reusable across evaluation
/// points.
#[derive(Debug, Clone)]
pub struct DomainPotential<T> {
    basis: EigenBasis<T>,
    modes: Vec<usize>,
    time: TimeGrid<T>,
    /// `(h(·, s_j), ω_k)`.
    sources: Vec<Vec<T>>,
    /// `∫_0^{t_j} e^{-λ_k(t_j - s)} (h(·, s), ω_k) ds`.
    potentials: Vec<Vec<T>>,
}

impl<T: Real> DomainPotential<T> {
    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    /// 1-based mode indices of the kernel basis that were used.
    pub fn mode_indices(&self) -> Vec<usize> {
        self.modes.iter().map(|k| k + 1).collect()
    }

    pub fn source_coefficients(&self) -> &[Vec<T>] {
        &self.sources
    }

    pub fn coefficients(&self) -> &[Vec<T>] {
        &self.potentials
    }

    /// Value at a time node.
    pub fn eval_node(&self, x: Point<T>, j: usize) -> T {
        self.modes.iter().zip(&self.potentials).map(|(&k, p)| p[j] * self.basis.modes()[k].eval(x)).sum()
    }

    pub fn eval(&self, x: Point<T>, t: T) -> Result<T> {
        if t < T::zero() || t > self.time.horizon * (T::one() + T::epsilon() * T::lit(16.0)) {
            return Err(Error::input(format!("t = {t} outside [0, {}]", self.time.horizon)));
        }
        let (j, theta) = self.time.locate(t.min(self.time.horizon));
        let dt = self.time.dt();
        let partial = dt * theta;
        let mut sum = T::zero();
        for ((&k, p), c) in self.modes.iter().zip(&self.potentials).zip(&self.sources) {
            let mode = self.basis.modes()[k];
            let value = if partial <= T::zero() {
                p[j]
            } else {
                let c_t = c[j] * (T::one() - theta) + c[j + 1] * theta;
                let (w0, w1) = exp_cell_weights(mode.eigenvalue, partial);
                (-mode.eigenvalue * partial).exp() * p[j] + w0 * c[j] + w1 * c_t
            };
            sum = sum + value * mode.eval(x);
        }
        Ok(sum)
    }

    /// Values on every node of `grid` at every time node.
    pub fn on_grid(&self, grid: &SpatialGrid<T>) -> SpaceTimeField<T> {
        let samples: Vec<Vec<T>> = self.modes.iter().map(|&k| grid.sample(|p| self.basis.modes()[k].eval(p))).collect();
        let mut field = SpaceTimeField::zeros(grid.clone(), self.time);
        for j in 0..self.time.len() {
            let snap = field.snapshot_mut(j);
            for (s, p) in samples.iter().zip(&self.potentials) {
                let a = p[j];
                for (v, &m) in snap.iter_mut().zip(s) {
                    *v = *v + a * m;
                }
            }
        }
        field
    }
}

#[inline]
fn gaussian<T: Real>(z: T, tau: T) -> T {
    (-(z * z) / (T::lit(4.0) * tau)).exp() / (T::lit(4.0) * T::PI() * tau).sqrt()
}

/// 1D Neumann kernel on `(0, L)` as a sum of `2n + 1` image pairs.
pub fn images_1d<T: Real>(x: T, y: T, tau: T, length: T, n: usize) -> T {
    let two_l = T::lit(2.0) * length;
    let mut sum = T::zero();
    let n = n as i64;
    for k in -n..=n {
        let shift = two_l * T::from_i64(k).unwrap_or_else(T::zero);
        sum = sum + gaussian(x - y + shift, tau) + gaussian(x + y + shift, tau);
    }
    sum
}

/// `∫_a^b` of [`images_1d`] in `y`.
pub fn images_1d_segment<T: Real>(x: T, a: T, b: T, tau: T, length: T, n: usize) -> T {
    let two_l = T::lit(2.0) * length;
    let scale = T::one() / (T::lit(4.0) * tau).sqrt();
    let half = T::lit(0.5);
    let mut sum = T::zero();
    let n = n as i64;
    for k in -n..=n {
        let c = two_l * T::from_i64(k).unwrap_or_else(T::zero);
        let direct = ((x - a + c) * scale).erf() - ((x - b + c) * scale).erf();
        let mirror = ((x + b + c) * scale).erf() - ((x + a + c) * scale).erf();
        sum = sum + half * (direct + mirror);
    }
    sum
}
