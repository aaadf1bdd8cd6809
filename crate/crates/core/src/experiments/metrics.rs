//! Scoring of a reconstructed curve against the generating `f`.

use serde::Serialize;

use crate::forward::NonlinearityFn;
use crate::reconstruction::CurveEstimate;

/// Error of `f̂` against `f` on `n + 1` uniform points of the trusted range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveErrors {
    pub absolute_linf: f64,
    pub relative_linf: f64,
    pub relative_l2: f64,
    /// Normalization of the relative errors.
    pub scale: f64,
    /// `"f"` when `max |f|` over the band is positive, `"flux"` otherwise.
    pub scale_kind: &'static str,
    pub band: (f64, f64),
}

/// With `f ≡ 0` on the band the errors are relative to `flux_scale`.
pub fn curve_errors(curve: &CurveEstimate<f64>, f: &NonlinearityFn<f64>, flux_scale: f64) -> CurveErrors {
    let band = curve.trusted;
    let n = 400;
    let mut abs_max = 0.0f64;
    let mut f_max = 0.0f64;
    let mut err_sq = 0.0;
    let mut f_sq = 0.0;
    for i in 0..=n {
        let u = band.0 + (band.1 - band.0) * i as f64 / n as f64;
        let (fh, fv) = (curve.eval(u), f.value(u));
        abs_max = abs_max.max((fh - fv).abs());
        f_max = f_max.max(fv.abs());
        err_sq += (fh - fv) * (fh - fv);
        f_sq += fv * fv;
    }
    let (scale, scale_kind, l2_scale) = if f_max > 0.0 {
        (f_max, "f", f_sq.sqrt())
    } else {
        let s = flux_scale.max(f64::MIN_POSITIVE);
        (s, "flux", s * ((n + 1) as f64).sqrt())
    };
    CurveErrors {
        absolute_linf: abs_max,
        relative_linf: abs_max / scale,
        relative_l2: err_sq.sqrt() / l2_scale,
        scale,
        scale_kind,
        band,
    }
}
