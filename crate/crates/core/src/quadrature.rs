//! Gauss–Legendre rules and the exponentially weighted convolution used for
//! `∫_0^t e^{-λ(t-s)} c(s) ds` on a uniform grid.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule via Newton iteration on `P_n`, seeded by the
    /// Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes: nodes.into_iter().map(T::lit).collect(), weights: weights.into_iter().map(T::lit).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<T>() * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Weights `(w_prev, w_curr)` such that for `c` linear on a cell of width
/// `dt`, `∫_0^dt e^{-λ(dt-r)} c(r) dr = w_prev c(0) + w_curr c(dt)`.
pub fn exp_cell_weights<T: Real>(lambda: T, dt: T) -> (T, T) {
    let z = lambda * dt;
    // A0 = ∫_0^dt e^{-λq} dq, A1 = ∫_0^dt e^{-λq} q/dt dq
    let (a0, a1) = if z.abs() < T::lit(0.1) {
        // series: A0/dt = Σ (-z)^n/(n+1)!, A1/dt = Σ (-z)^n (n+1)/(n+2)!
        let mut s0 = T::zero();
        let mut s1 = T::zero();
        let mut term = T::one(); // (-z)^n / (n+1)!
        for n in 0..20usize {
            let nf = T::from_usize_lossy(n);
            s0 = s0 + term;
            s1 = s1 + term * (nf + T::one()) / (nf + T::lit(2.0));
            term = term * (-z) / (nf + T::lit(2.0));
        }
        (s0 * dt, s1 * dt)
    } else {
        let e = (-z).exp();
        ((T::one() - e) / z * dt, (T::one() - (T::one() + z) * e) / (z * z) * dt)
    };
    // c(r) = c0 (1 - r/dt) + c1 r/dt with q = dt - r:
    //   weight of c1 = A0 - A1, weight of c0 = A1
    (a1, a0 - a1)
}

/// `p(t_j) = ∫_0^{t_j} e^{-λ(t_j - s)} c(s) ds` for `c` sampled on a uniform
/// grid and interpolated linearly. Exact for piecewise-linear `c`.
pub fn exp_convolve<T: Real>(lambda: T, dt: T, c: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(c.len());
    if c.is_empty() {
        return out;
    }
    let decay = (-lambda * dt).exp();
    let (w_prev, w_curr) = exp_cell_weights(lambda, dt);
    let mut p = T::zero();
    out.push(p);
    for j in 1..c.len() {
        p = decay * p + w_prev * c[j - 1] + w_curr * c[j];
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in 1..=12 {
            let gl = GaussLegendre::<f64>::new(n);
            for deg in 0..(2 * n) {
                let want = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                let got = gl.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                assert!((got - want).abs() < 1e-12 * want.max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn gauss_legendre_f32() {
        let gl = GaussLegendre::<f32>::new(5);
        assert!((gl.integrate(0.0, 1.0, |x| x.exp()) - (1f32.exp() - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn exp_convolve_constant_source() {
        let dt = 1.0 / 256.0;
        let c = vec![1.0; 257];
        for &lambda in &[0.0, 1e-3, 9.8696, 400.0] {
            let p = exp_convolve(lambda, dt, &c);
            for (j, &pj) in p.iter().enumerate() {
                let t = j as f64 * dt;
                let exact = if lambda == 0.0 { t } else { (1.0 - (-lambda * t).exp()) / lambda };
                assert!((pj - exact).abs() < 1e-12, "lambda={lambda} j={j}");
            }
        }
    }

    #[test]
    fn exp_convolve_linear_source_exact() {
        let dt = 0.05;
        let lambda = 3.0;
        let c: Vec<f64> = (0..21).map(|j| j as f64 * dt).collect();
        let p = exp_convolve(lambda, dt, &c);
        let t = 1.0;
        // ∫_0^t e^{-λ(t-s)} s ds = t/λ - (1 - e^{-λt})/λ²
        let exact = t / lambda - (1.0 - (-lambda * t).exp()) / (lambda * lambda);
        assert!((p[20] - exact).abs() < 1e-13);
    }

    #[test]
    fn cell_weights_continuous_across_series_switch() {
        let dt = 1.0;
        let (a, b): (f64, f64) = exp_cell_weights(0.0999999, dt);
        let (c, d) = exp_cell_weights(0.1000001, dt);
        assert!((a - c).abs() < 1e-7 && (b - d).abs() < 1e-7);
    }
}
