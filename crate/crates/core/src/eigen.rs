//! Closed-form eigenpairs of the Neumann Laplacian on the interval and the
//! rectangle.
//!
//! On `(0, L)` the modes are `cos(mπx/L)`, normalised in L². On the
//! rectangle they are tensor products of the per-axis modes, ordered by
//! eigenvalue with ties broken by the lexicographic order of the per-axis
//! indices `(m, n)`.

use std::cmp::Ordering;

use crate::domain::{DomainSpec, Point, Side, SpatialGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Normalised 1D cosine mode `c_m cos(mπx/L)` on `(0, L)`.
#[inline]
pub fn axis_mode<T: Real>(m: usize, length: T, x: T) -> T {
    axis_norm(m, length) * (T::from_usize_lossy(m) * T::PI() * x / length).cos()
}

#[inline]
fn axis_norm<T: Real>(m: usize, length: T) -> T {
    if m == 0 {
        T::one() / length.sqrt()
    } else {
        (T::lit(2.0) / length).sqrt()
    }
}

/// `∫_a^b c_m cos(mπs/L) ds`.
pub fn axis_mode_integral<T: Real>(m: usize, length: T, a: T, b: T) -> T {
    let c = axis_norm(m, length);
    if m == 0 {
        return c * (b - a);
    }
    let k = T::from_usize_lossy(m) * T::PI() / length;
    // sin(kb) - sin(ka) = 2 cos(k(a+b)/2) sin(k(b-a)/2)
    let two = T::lit(2.0);
    c * two * (k * (a + b) / two).cos() * (k * (b - a) / two).sin() / k
}

/// One eigenpair: per-axis indices, eigenvalue and the L² normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T> {
    pub index: [usize; 2],
    pub eigenvalue: T,
    lengths: [T; 2],
    dim: usize,
}

impl<T: Real> Mode<T> {
    pub fn eval(&self, p: Point<T>) -> T {
        let mut v = axis_mode(self.index[0], self.lengths[0], p.x);
        if self.dim == 2 {
            v = v * axis_mode(self.index[1], self.lengths[1], p.y);
        }
        v
    }

    /// Constant factor `ω(x) / Π cos(...)`.
    pub fn normalization(&self) -> T {
        let mut c = axis_norm(self.index[0], self.lengths[0]);
        if self.dim == 2 {
            c = c * axis_norm(self.index[1], self.lengths[1]);
        }
        c
    }

    /// Value of the per-axis factor along `axis` at coordinate `s`.
    pub fn axis_factor(&self, axis: usize, s: T) -> T {
        if axis >= self.dim {
            return T::one();
        }
        axis_mode(self.index[axis], self.lengths[axis], s)
    }

    /// `∫ ω dS` over the boundary segment `[a, b]` of `side` (rectangle), or
    /// the point value at the endpoint (interval).
    pub fn side_integral(&self, side: Side, a: T, b: T) -> T {
        let n_axis = side.normal_axis();
        let fixed = if side.at_origin() { T::zero() } else { self.lengths[n_axis] };
        if self.dim == 1 {
            return self.axis_factor(0, fixed);
        }
        let t_axis = side.tangent_axis();
        self.axis_factor(n_axis, fixed) * axis_mode_integral(self.index[t_axis], self.lengths[t_axis], a, b)
    }
}

/// The first `K` Neumann eigenpairs of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis<T> {
    domain: DomainSpec<T>,
    modes: Vec<Mode<T>>,
}

impl<T: Real> EigenBasis<T> {
    pub fn new(domain: DomainSpec<T>, count: usize) -> Result<Self> {
        domain.validate()?;
        if count == 0 {
            return Err(Error::config("eigenbasis needs at least one mode"));
        }
        let lengths = domain.lengths();
        let dim = domain.dim();
        let lx = lengths[0];
        let ly = if dim == 2 { lengths[1] } else { T::one() };
        let lambda = |m: usize, l: T| {
            let k = T::from_usize_lossy(m) * T::PI() / l;
            k * k
        };
        let mut modes = Vec::new();
        // the first `count` modes never need an axis index >= count
        let ny_max = if dim == 2 { count } else { 1 };
        for n in 0..ny_max {
            for m in 0..count {
                let ev = if dim == 2 { lambda(m, lx) + lambda(n, ly) } else { lambda(m, lx) };
                modes.push(Mode { index: [m, n], eigenvalue: ev, lengths: [lx, ly], dim });
            }
        }
        modes.sort_by(compare_modes);
        modes.truncate(count);
        // equal eigenvalues computed along different paths may differ in the last bits
        for k in 1..modes.len() {
            if compare_modes(&modes[k - 1], &modes[k]) == Ordering::Less && same_eigenvalue(&modes[k - 1], &modes[k]) {
                modes[k].eigenvalue = modes[k - 1].eigenvalue;
            }
        }
        Ok(EigenBasis { domain, modes })
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    /// 1-based access to the k-th mode.
    pub fn mode(&self, k: usize) -> &Mode<T> {
        &self.modes[k - 1]
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// All mode values at `p`.
    pub fn eval_all(&self, p: Point<T>) -> Vec<T> {
        self.modes.iter().map(|m| m.eval(p)).collect()
    }

    /// Mode samples on the grid: `out[k][node]`.
    pub fn sample(&self, grid: &SpatialGrid<T>) -> Vec<Vec<T>> {
        self.modes.iter().map(|m| grid.sample(|p| m.eval(p))).collect()
    }

    /// Largest per-axis index in use, for resolution checks.
    pub fn max_axis_index(&self, axis: usize) -> usize {
        self.modes.iter().map(|m| m.index[axis]).max().unwrap_or(0)
    }

    /// Whether every mode has at least eight grid points per wavelength.
    pub fn resolved_on(&self, grid: &SpatialGrid<T>) -> bool {
        (0..self.domain.dim()).all(|axis| 4 * self.max_axis_index(axis) <= grid.cells(axis))
    }

    /// Smaller basis holding the first `count` modes.
    pub fn truncated(&self, count: usize) -> Self {
        EigenBasis { domain: self.domain, modes: self.modes[..count.min(self.modes.len())].to_vec() }
    }
}

fn same_eigenvalue<T: Real>(a: &Mode<T>, b: &Mode<T>) -> bool {
    let scale = a.eigenvalue.abs().max(b.eigenvalue.abs()).max(T::one());
    (a.eigenvalue - b.eigenvalue).abs() <= T::epsilon() * T::lit(64.0) * scale
}

fn compare_modes<T: Real>(a: &Mode<T>, b: &Mode<T>) -> Ordering {
    if same_eigenvalue(a, b) {
        a.index.cmp(&b.index)
    } else if a.eigenvalue < b.eigenvalue {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// The k-th eigenpair (1-based).
pub fn eigenpair<T: Real>(domain: DomainSpec<T>, k: usize) -> Result<Mode<T>> {
    if k == 0 {
        return Err(Error::config("eigenpair index is 1-based"));
    }
    let basis = EigenBasis::new(domain, k)?;
    Ok(*basis.mode(k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalityReport<T> {
    /// `max |(ω_i, ω_j)_h - δ_ij|`.
    pub max_deviation: T,
    /// Set when the top mode has fewer than eight points per wavelength.
    pub under_resolved: bool,
}

pub fn verify_orthonormality<T: Real>(basis: &EigenBasis<T>, grid: &SpatialGrid<T>) -> Result<OrthonormalityReport<T>> {
    if basis.domain() != grid.domain() {
        return Err(Error::input("basis and grid live on different domains"));
    }
    let samples = basis.sample(grid);
    let w = grid.weights();
    let mut dev = T::zero();
    for i in 0..samples.len() {
        let wi: Vec<T> = samples[i].iter().zip(w).map(|(&a, &b)| a * b).collect();
        for j in i..samples.len() {
            let g = crate::scalar::dot(&wi, &samples[j]);
            let target = if i == j { T::one() } else { T::zero() };
            dev = dev.max((g - target).abs());
        }
    }
    Ok(OrthonormalityReport { max_deviation: dev, under_resolved: !basis.resolved_on(grid) })
}

/// `max |Δ_h ω_k + λ_k ω_k|` over interior nodes and all modes, the
/// discrete-Laplacian eigen-residual.
pub fn laplacian_residual<T: Real>(basis: &EigenBasis<T>, grid: &SpatialGrid<T>) -> T {
    let interior = grid.interior_indices();
    let mut worst = T::zero();
    for (mode, values) in basis.modes().iter().zip(basis.sample(grid)) {
        for &k in &interior {
            let r = grid.laplacian_at(&values, k) + mode.eigenvalue * values[k];
            worst = worst.max(r.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;
    use std::f64::consts::PI;

    fn unit() -> DomainSpec<f64> {
        DomainSpec::interval(1.0).unwrap()
    }

    #[test]
    fn first_mode_is_constant() {
        let m = eigenpair(unit(), 1).unwrap();
        assert_eq!(m.eigenvalue, 0.0);
        for x in [0.0, 0.3, 1.0] {
            assert!((m.eval(Point::on_line(x)) - 1.0).abs() < 1e-15);
        }
        let rect = DomainSpec::rectangle(2.0, 3.0).unwrap();
        let m = eigenpair(rect, 1).unwrap();
        assert!((m.eval(Point::new(0.7, 1.1)) - 6f64.sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn second_interval_mode() {
        let m = eigenpair(unit(), 2).unwrap();
        assert!((m.eigenvalue - PI * PI).abs() < 1e-12);
        for x in [0.0, 0.25, 0.8] {
            assert!((m.eval(Point::on_line(x)) - 2f64.sqrt() * (PI * x).cos()).abs() < 1e-14);
        }
    }

    /// Dense discrete Neumann Laplacian (ghost-point reflection) and its
    /// second smallest eigenvalue by inverse iteration with shift.
    fn discrete_second_eigenvalue(n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let size = n + 1;
        // symmetric power iteration on (c I - A) restricted to mean-free vectors
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..size)
                .map(|i| {
                    let left = if i == 0 { v[1] } else { v[i - 1] };
                    let right = if i == n { v[n - 1] } else { v[i + 1] };
                    -(left - 2.0 * v[i] + right) / (h * h)
                })
                .collect()
        };
        // inverse-free: Rayleigh quotient of cos vector refined by a few
        // shifted power iterations towards the low end
        let mut v: Vec<f64> = (0..size).map(|i| (PI * i as f64 * h).cos() + 0.1 * (i as f64 * h).powi(3)).collect();
        let c = 4.0 / (h * h) + 1.0;
        let weights: Vec<f64> = (0..size).map(|i| if i == 0 || i == n { 0.5 } else { 1.0 }).collect();
        for _ in 0..20000 {
            let mean = v.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            let av = apply(&v);
            let mut next: Vec<f64> = v.iter().zip(&av).map(|(a, b)| c * a - b).collect();
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            next.iter_mut().for_each(|x| *x /= norm);
            v = next;
        }
        let av = apply(&v);
        let num: f64 = v.iter().zip(&av).zip(&weights).map(|((a, b), w)| a * b * w).sum();
        let den: f64 = v.iter().zip(&weights).map(|(a, w)| a * a * w).sum();
        num / den
    }

    #[test]
    fn second_eigenvalue_matches_discrete_limit() {
        let coarse = discrete_second_eigenvalue(16);
        let fine = discrete_second_eigenvalue(32);
        let exact = eigenpair(unit(), 2).unwrap().eigenvalue;
        let (e1, e2) = ((coarse - exact).abs(), (fine - exact).abs());
        assert!(e2 < e1 && e2 < 1e-2, "coarse {coarse} fine {fine} exact {exact}");
        assert!((e1 / e2).log2() > 1.9);
    }

    #[test]
    fn square_degeneracy_and_tie_break() {
        let basis = EigenBasis::new(DomainSpec::rectangle(1.0, 1.0).unwrap(), 6).unwrap();
        let idx: Vec<[usize; 2]> = basis.modes().iter().map(|m| m.index).collect();
        assert_eq!(idx, vec![[0, 0], [0, 1], [1, 0], [1, 1], [0, 2], [2, 0]]);
        assert!((basis.mode(2).eigenvalue - PI * PI).abs() < 1e-12);
        assert_eq!(basis.mode(2).eigenvalue, basis.mode(3).eigenvalue);
        // brute-force enumeration oracle for the first 30 eigenvalues
        let mut brute: Vec<f64> = (0..10)
            .flat_map(|m| (0..10).map(move |n| ((m * m + n * n) as f64) * PI * PI))
            .collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let basis = EigenBasis::new(DomainSpec::rectangle(1.0, 1.0).unwrap(), 30).unwrap();
        for (a, b) in basis.eigenvalues().iter().zip(&brute) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn ordering_is_deterministic() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let a = EigenBasis::new(d, 40).unwrap();
        let b = EigenBasis::new(d, 40).unwrap();
        assert_eq!(a, b);
        let ev = a.eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn orthonormality() {
        let g1 = build_grid(unit(), &[8]).unwrap();
        let b1 = EigenBasis::new(unit(), 1).unwrap();
        assert_eq!(verify_orthonormality(&b1, &g1).unwrap().max_deviation, 0.0);

        let g = build_grid(unit(), &[512]).unwrap();
        let b = EigenBasis::new(unit(), 16).unwrap();
        let rep = verify_orthonormality(&b, &g).unwrap();
        assert!(rep.max_deviation < 1e-6);
        assert!(!rep.under_resolved);

        let s = b.sample(&g);
        let cross: f64 = (0..g.len()).map(|i| g.weights()[i] * s[1][i] * s[2][i]).sum();
        assert!(cross.abs() < 1e-12);

        let coarse = build_grid(unit(), &[16]).unwrap();
        assert!(verify_orthonormality(&b, &coarse).unwrap().under_resolved);
    }

    #[test]
    fn rectangle_orthonormality() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let g = build_grid(d, &[64, 128]).unwrap();
        let b = EigenBasis::new(d, 32).unwrap();
        assert!(verify_orthonormality(&b, &g).unwrap().max_deviation < 1e-10);
    }

    #[test]
    fn eigen_residual_converges_at_second_order() {
        for d in [unit(), DomainSpec::rectangle(1.0, 1.5).unwrap()] {
            let b = EigenBasis::new(d, 8).unwrap();
            let errs: Vec<f64> = [32usize, 64, 128]
                .iter()
                .map(|&n| laplacian_residual(&b, &build_grid(d, &[n, n]).unwrap()))
                .collect();
            for w in errs.windows(2) {
                assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
            }
        }
    }

    #[test]
    fn side_integrals() {
        let d = DomainSpec::rectangle(2.0, 1.0).unwrap();
        let b = EigenBasis::new(d, 10).unwrap();
        for m in b.modes() {
            // midpoint rule with many panels as oracle
            let (a, c) = (0.3, 1.7);
            let panels = 20000;
            let h = (c - a) / panels as f64;
            let brute: f64 = (0..panels).map(|i| m.eval(Point::new(a + (i as f64 + 0.5) * h, 1.0)) * h).sum();
            assert!((m.side_integral(Side::Top, a, c) - brute).abs() < 1e-7);
        }
    }

    #[test]
    fn generic_over_f32() {
        let m = eigenpair(DomainSpec::interval(1.0f32).unwrap(), 2).unwrap();
        assert!((m.eigenvalue - std::f32::consts::PI.powi(2)).abs() < 1e-4);
    }
}
