//! Small linear solvers: Thomas algorithm for tridiagonal systems and
//! matrix-free conjugate gradients.

use crate::scalar::{dot, Real};

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` in place
/// of `rhs`. `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &mut [T]) {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return;
    }
    let mut c = vec![T::zero(); n];
    let mut beta = diag[0];
    c[0] = sup[0] / beta;
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / beta;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgStats<T> {
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite operator. `x`
/// holds the initial guess on entry.
pub fn conjugate_gradient<T: Real, A: Fn(&[T], &mut [T])>(
    apply: A,
    rhs: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> CgStats<T> {
    let n = rhs.len();
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = rhs.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let bnorm = dot(rhs, rhs).sqrt().max(T::min_positive_value());
    let mut ap = vec![T::zero(); n];
    let mut it = 0;
    while it < max_iter && rr.sqrt() > rel_tol * bnorm {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        it += 1;
    }
    let rel = rr.sqrt() / bnorm;
    CgStats { iterations: it, relative_residual: rel, converged: rel <= rel_tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense() {
        let n = 6;
        let sub = vec![0.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        let diag = vec![4.0; n];
        let sup = vec![-1.0, -1.0, -1.0, -1.0, -1.0, 0.0];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += sub[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    v += sup[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        solve_tridiagonal(&sub, &diag, &sup, &mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        // 1D Dirichlet Laplacian + identity
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = 3.0 * v[i] - l - r;
            }
        };
        let x_true: Vec<f64> = (0..n).map(|i| (0.1 * i as f64).cos()).collect();
        let mut b = vec![0.0; n];
        apply(&x_true, &mut b);
        let mut x = vec![0.0; n];
        let stats = conjugate_gradient(apply, &b, &mut x, 1e-13, 500);
        assert!(stats.converged);
        for (a, c) in x.iter().zip(&x_true) {
            assert!((a - c).abs() < 1e-11);
        }
    }
}
