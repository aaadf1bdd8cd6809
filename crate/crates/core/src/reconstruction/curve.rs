//! Aggregation of the sampled graph `(φ, F)` into a monotone curve `f̂`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Settings for [`build_curve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig<T> {
    pub bins: usize,
    pub monotone: bool,
    /// Quantiles of the observed `φ` values bounding the trusted range.
    pub quantiles: (T, T),
}

impl<T: Real> CurveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 8 {
            return Err(Error::config(format!("at least 8 bins are required, got {}", self.bins)));
        }
        let (lo, hi) = self.quantiles;
        if !(lo >= T::zero() && lo < hi && hi <= T::one()) {
            return Err(Error::config(format!("quantiles must satisfy 0 <= q_lo < q_hi <= 1, got ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Piecewise-linear estimate of `f` on `[0, max φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEstimate<T> {
    /// Strictly increasing, starting with the anchor `0`.
    pub knots: Vec<T>,
    pub values: Vec<T>,
    /// Samples behind each knot (zero for the anchor).
    pub counts: Vec<usize>,
    /// Interquartile range of the `F` samples in each bin.
    pub spreads: Vec<T>,
    pub trusted: (T, T),
    /// Bins that received no samples.
    pub dropped_bins: usize,
}

/// Value of [`evaluate_curve`] with its range flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveValue<T> {
    pub value: T,
    /// Outside the trusted quantile band.
    pub untrusted: bool,
    /// Below zero or beyond the last knot; the value was clamped.
    pub clamped: bool,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile<T: Real>(sorted: &[T], q: T) -> T {
    if sorted.is_empty() {
        return T::zero();
    }
    let pos = q.max(T::zero()).min(T::one()) * T::from_usize_lossy(sorted.len() - 1);
    let i = pos.floor().to_usize().unwrap_or(0).min(sorted.len() - 1);
    if i + 1 >= sorted.len() {
        return sorted[i];
    }
    let w = pos - T::from_usize_lossy(i);
    sorted[i] * (T::one() - w) + sorted[i + 1] * w
}

fn median<T: Real>(sorted: &[T]) -> T {
    quantile(sorted, T::lit(0.5))
}

fn sort<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
}

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn pool_adjacent_violators<T: Real>(values: &[T], weights: &[T]) -> Vec<T> {
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(T, T, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (m2, w2, l2) = blocks[n - 1];
            let (m1, w1, l1) = blocks[n - 2];
            if m1 <= m2 {
                break;
            }
            let w = w1 + w2;
            let m = if w > T::zero() { (m1 * w1 + m2 * w2) / w } else { (m1 + m2) / T::lit(2.0) };
            blocks.truncate(n - 2);
            blocks.push((m, w, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| std::iter::repeat_n(m, l)).collect()
}

/// Bins the pairs `(φ, F)` over `[0, max φ]`, takes per-bin medians, anchors
/// `f̂(0) = 0` and optionally projects onto nondecreasing nonnegative
/// sequences.
pub fn build_curve<T: Real>(phi: &[T], values: &[T], config: &CurveConfig<T>) -> Result<CurveEstimate<T>> {
    config.validate()?;
    if phi.len() != values.len() {
        return Err(Error::input(format!("{} φ samples but {} F samples", phi.len(), values.len())));
    }
    if phi.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::Reconstruction("non-finite sample in the (φ, F) graph".into()));
    }
    let max_phi = phi.iter().fold(T::zero(), |m, &v| m.max(v));
    if max_phi <= T::zero() {
        return Err(Error::Reconstruction("φ never leaves zero; the curve has no support".into()));
    }
    let bins = config.bins;
    let width = max_phi / T::from_usize_lossy(bins);
    let mut members: Vec<Vec<(T, T)>> = vec![Vec::new(); bins];
    for (&p, &v) in phi.iter().zip(values) {
        let b = (p / width).floor().to_usize().unwrap_or(0).min(bins - 1);
        members[b].push((p, v));
    }
    let mut knots = vec![T::zero()];
    let mut fitted = vec![T::zero()];
    let mut counts = vec![0];
    let mut spreads = vec![T::zero()];
    let mut dropped = 0;
    let mut nonempty = 0;
    for bin in &members {
        if bin.is_empty() {
            dropped += 1;
            continue;
        }
        nonempty += 1;
        let mut ps: Vec<T> = bin.iter().map(|s| s.0).collect();
        let mut fs: Vec<T> = bin.iter().map(|s| s.1).collect();
        sort(&mut ps);
        sort(&mut fs);
        let knot = median(&ps);
        if knot <= *knots.last().unwrap_or(&T::zero()) {
            // samples sitting on φ = 0 are represented by the anchor
            continue;
        }
        knots.push(knot);
        fitted.push(median(&fs));
        counts.push(bin.len());
        spreads.push(quantile(&fs, T::lit(0.75)) - quantile(&fs, T::lit(0.25)));
    }
    if nonempty < 3 || knots.len() < 3 {
        return Err(Error::Reconstruction(format!(
            "only {nonempty} of {bins} bins received samples; at least 3 are needed"
        )));
    }
    if config.monotone {
        let weights: Vec<T> = counts[1..].iter().map(|&c| T::from_usize_lossy(c)).collect();
        let fit = pool_adjacent_violators(&fitted[1..], &weights);
        for (slot, v) in fitted[1..].iter_mut().zip(fit) {
            *slot = v.max(T::zero());
        }
    }
    let mut sorted_phi = phi.to_vec();
    sort(&mut sorted_phi);
    let trusted = (quantile(&sorted_phi, config.quantiles.0), quantile(&sorted_phi, config.quantiles.1));
    Ok(CurveEstimate { knots, values: fitted, counts, spreads, trusted, dropped_bins: dropped })
}

/// Piecewise-linear interpolation of the curve with range flags.
pub fn evaluate_curve<T: Real>(curve: &CurveEstimate<T>, u: T) -> CurveValue<T> {
    let untrusted = u < curve.trusted.0 || u > curve.trusted.1;
    let last = curve.knots.len() - 1;
    if u < T::zero() {
        return CurveValue { value: curve.values[0], untrusted, clamped: true };
    }
    if u > curve.knots[last] {
        return CurveValue { value: curve.values[last], untrusted, clamped: true };
    }
    let i = curve.knots.partition_point(|&k| k <= u).saturating_sub(1).min(last.saturating_sub(1));
    let (k0, k1) = (curve.knots[i], curve.knots[i + 1]);
    let value = if u == k0 {
        curve.values[i]
    } else if u == k1 {
        curve.values[i + 1]
    } else {
        let w = (u - k0) / (k1 - k0);
        curve.values[i] * (T::one() - w) + curve.values[i + 1] * w
    };
    CurveValue { value, untrusted, clamped: false }
}

impl<T: Real> CurveEstimate<T> {
    pub fn eval(&self, u: T) -> T {
        evaluate_curve(self, u).value
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> CurveConfig<f64> {
        CurveConfig { bins: 32, monotone: true, quantiles: (0.1, 0.9) }
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn zero_samples_give_zero_curve() {
        let phi = grid(200);
        let c = build_curve(&phi, &vec![0.0; phi.len()], &config()).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
        assert_eq!(c.knots[0], 0.0);
    }

    #[test]
    fn identity_graph_is_recovered() {
        let phi = grid(1000);
        let c = build_curve(&phi, &phi, &config()).unwrap();
        let width = 1.0 / 32.0;
        for u in grid(97) {
            assert!((c.eval(u) - u).abs() <= width, "{u}");
        }
        for (k, v) in c.knots.iter().zip(&c.values) {
            assert!((k - v).abs() < 1e-12);
        }
        assert!((c.trusted.0 - 0.1).abs() < 1e-12 && (c.trusted.1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn noisy_identity_is_monotone_and_close() {
        // deterministic ±0.05 perturbation
        let phi = grid(4000);
        let noisy: Vec<f64> = phi.iter().enumerate().map(|(i, &p)| p + 0.05 * ((i as f64 * 0.7).sin())).collect();
        let c = build_curve(&phi, &noisy, &config()).unwrap();
        assert!(c.is_nondecreasing());
        assert_eq!(c.values[0], 0.0);
        for u in grid(200) {
            assert!((c.eval(u) - u).abs() <= 0.05 + 1.0 / 32.0, "{u}");
        }
    }

    #[test]
    fn evaluation_flags_and_identities() {
        let phi = grid(1000);
        let c = build_curve(&phi, &phi, &config()).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        for (i, &k) in c.knots.iter().enumerate() {
            assert_eq!(c.eval(k), c.values[i]);
        }
        for u in [0.123, 0.5, 0.777] {
            assert!((c.eval(u) - u).abs() < 1e-12);
        }
        let v = evaluate_curve(&c, 0.05);
        assert!(v.untrusted && !v.clamped);
        let v = evaluate_curve(&c, 0.5);
        assert!(!v.untrusted && !v.clamped);
        let v = evaluate_curve(&c, -1.0);
        assert!(v.clamped && v.value == 0.0);
        let v = evaluate_curve(&c, 2.0);
        assert!(v.clamped && v.value == *c.values.last().unwrap());
    }

    #[test]
    fn sparse_samples_fail() {
        let phi = [0.0, 1.0, 1.0];
        assert!(matches!(build_curve(&phi, &phi, &config()), Err(Error::Reconstruction(_))));
        let phi = grid(100);
        let mut bad = config();
        bad.bins = 4;
        assert!(matches!(build_curve(&phi, &phi, &bad), Err(Error::Config(_))));
        bad = config();
        bad.quantiles = (0.9, 0.1);
        assert!(build_curve(&phi, &phi, &bad).is_err());
        let zero = vec![0.0; 10];
        assert!(build_curve(&zero, &zero, &config()).is_err());
    }

    #[test]
    fn empty_bins_are_dropped() {
        let phi: Vec<f64> = grid(100).into_iter().filter(|&p| !(0.3..0.6).contains(&p)).collect();
        let c = build_curve(&phi, &phi, &config()).unwrap();
        assert!(c.dropped_bins >= 8);
        assert_eq!(c.knots.len(), c.values.len());
        assert!(c.knots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pava_matches_brute_force() {
        let v = [3.0, 1.0, 2.0, 0.0, 5.0];
        let w = [1.0, 2.0, 1.0, 1.0, 1.0];
        let fit = pool_adjacent_violators(&v, &w);
        let mean = (3.0 + 2.0 + 2.0 + 0.0) / 5.0;
        assert_eq!(fit, vec![mean, mean, mean, mean, 5.0]);
    }
}
