//! The two break-point estimators: `l_hat_V` from a spline fit of the
//! cumulative absolute-deviation statistic, and `l_hat_C` from an exhaustive
//! two-segment line fit of the cumulative second moment. Plus the end-to-end
//! segmentation pipeline combining each estimator with its regime test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{ansari_bradley, quantile_binomial_test, ScaleTestOutcome, TestOutcome};
use crate::linalg;
use crate::mars::{fit_mars, MarsConfig};
use crate::series::{c_statistics, v_statistics, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    VMars,
    CTwoLine,
}

/// Coefficient summary of the fit behind an estimated break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSummary {
    /// Three-parameter two-slope refit at the break: the first segment is
    /// `beta0 - beta1*l + beta1*j`, the second `beta0 + beta2*l - beta2*j`.
    Hinge { beta0: f64, beta1: f64, beta2: f64 },
    /// Independent per-segment regression lines `a + b*j`.
    TwoLine { a1: f64, b1: f64, a2: f64, b2: f64 },
}

impl ModelSummary {
    /// Segment line coefficients `(a1, b1, a2, b2)` in the two-line form.
    pub fn segment_lines(&self, l: f64) -> (f64, f64, f64, f64) {
        match *self {
            ModelSummary::Hinge { beta0, beta1, beta2 } => {
                (beta0 - beta1 * l, beta1, beta0 + beta2 * l, -beta2)
            }
            ModelSummary::TwoLine { a1, b1, a2, b2 } => (a1, b1, a2, b2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointResult {
    pub method: Method,
    /// Estimated break index, 1-based, in `[1, n-1]`.
    pub l_hat: usize,
    pub model_summary: ModelSummary,
    /// GCV of the pruned spline for `VMars`; total two-segment SSE for
    /// `CTwoLine`.
    pub objective: f64,
}

/// Outcome of a break search: a linear diagnostic statistic legitimately
/// needs no knot, so "no break" is a first-class result, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Detection {
    Found(ChangePointResult),
    NoBreak,
}

impl Detection {
    pub fn found(&self) -> Option<&ChangePointResult> {
        match self {
            Detection::Found(r) => Some(r),
            Detection::NoBreak => None,
        }
    }
}

/// Constrained three-parameter refit of the two-slope model at break `l`
/// (possibly fractional): columns `[1, (l-j)+, (j-l)+]` solved by QR.
/// Returns `(beta0, beta1, beta2, sse)` in the segment-line convention of
/// [`ModelSummary::Hinge`].
fn constrained_refit(ys: &[f64], l: f64) -> (f64, f64, f64, f64) {
    let n = ys.len();
    let ones = vec![1.0; n];
    let before: Vec<f64> = (1..=n).map(|j| (l - j as f64).max(0.0)).collect();
    let after: Vec<f64> = (1..=n).map(|j| (j as f64 - l).max(0.0)).collect();
    let beta = linalg::lstsq(&[ones, before.clone(), after.clone()], ys);
    let mut sse = 0.0;
    for j in 0..n {
        let fitted = beta[0] + beta[1] * before[j] + beta[2] * after[j];
        let r = ys[j] - fitted;
        sse += r * r;
    }
    // g0 + g1*(l-j)+ + g2*(j-l)+ rewritten so that the first-segment slope
    // is beta1 and the second-segment slope is -beta2
    (beta[0], -beta[1], -beta[2], sse)
}

/// Break estimation from the cumulative absolute-deviation statistic via the
/// spline fit. Among the knots surviving pruning, the one whose constrained
/// two-slope refit has minimal SSE wins; ties go to the smallest knot.
pub fn estimate_l_v(series: &TimeSeries, config: &MarsConfig) -> Result<Detection> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "break estimation needs at least 10 observations, got {n}"
        )));
    }
    let v = v_statistics(series);
    let xs: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let model = fit_mars(&xs, &v.values, config)?;
    let knots = model.knots();
    if knots.is_empty() {
        return Ok(Detection::NoBreak);
    }

    let mut best: Option<(f64, f64)> = None; // (knot, sse)
    for &k in &knots {
        let (_, _, _, sse) = constrained_refit(&v.values, k);
        match best {
            Some((_, s)) if sse >= s => {}
            _ => best = Some((k, sse)),
        }
    }
    let (knot, _) = best.unwrap();
    let l_hat = (knot.round() as usize).clamp(1, n - 1);
    let (beta0, beta1, beta2, _) = constrained_refit(&v.values, l_hat as f64);
    Ok(Detection::Found(ChangePointResult {
        method: Method::VMars,
        l_hat,
        model_summary: ModelSummary::Hinge {
            beta0,
            beta1,
            beta2,
        },
        objective: model.gcv,
    }))
}

/// Per-segment OLS sums over a contiguous index range, O(1) via prefix sums.
struct SegmentSums {
    sx: Vec<f64>,
    sxx: Vec<f64>,
    sy: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
}

impl SegmentSums {
    fn new(ys: &[f64]) -> Self {
        let n = ys.len();
        let mut s = Self {
            sx: vec![0.0; n + 1],
            sxx: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            sxy: vec![0.0; n + 1],
            syy: vec![0.0; n + 1],
        };
        for j in 1..=n {
            let x = j as f64;
            let y = ys[j - 1];
            s.sx[j] = s.sx[j - 1] + x;
            s.sxx[j] = s.sxx[j - 1] + x * x;
            s.sy[j] = s.sy[j - 1] + y;
            s.sxy[j] = s.sxy[j - 1] + x * y;
            s.syy[j] = s.syy[j - 1] + y * y;
        }
        s
    }

    /// `(a, b, sse)` of the OLS line over 1-based indices `[lo, hi]`.
    fn line(&self, lo: usize, hi: usize) -> (f64, f64, f64) {
        let m = (hi - lo + 1) as f64;
        let sx = self.sx[hi] - self.sx[lo - 1];
        let sxx = self.sxx[hi] - self.sxx[lo - 1];
        let sy = self.sy[hi] - self.sy[lo - 1];
        let sxy = self.sxy[hi] - self.sxy[lo - 1];
        let syy = self.syy[hi] - self.syy[lo - 1];
        let vxx = sxx - sx * sx / m;
        let vxy = sxy - sx * sy / m;
        let vyy = syy - sy * sy / m;
        let b = vxy / vxx;
        let a = (sy - b * sx) / m;
        let sse = (vyy - vxy * vxy / vxx).max(0.0);
        (a, b, sse)
    }
}

/// Break estimation from the cumulative second moment: exhaustive scan over
/// split points, fitting one line per side and minimizing the sum of the two
/// segment SSEs. Ties go to the smallest split.
pub fn estimate_l_c(series: &TimeSeries) -> Result<ChangePointResult> {
    let n = series.len();
    if n < 6 {
        return Err(Error::InsufficientData(format!(
            "two-line estimation needs at least 6 observations, got {n}"
        )));
    }
    let c = c_statistics(series);
    let sums = SegmentSums::new(&c.values);

    let mut best_k = 2usize;
    let mut best_sse = f64::INFINITY;
    for k in 2..=n - 2 {
        let (_, _, sse1) = sums.line(1, k);
        let (_, _, sse2) = sums.line(k + 1, n);
        let total = sse1 + sse2;
        if total < best_sse {
            best_sse = total;
            best_k = k;
        }
    }
    let (a1, b1, _) = sums.line(1, best_k);
    let (a2, b2, _) = sums.line(best_k + 1, n);
    Ok(ChangePointResult {
        method: Method::CTwoLine,
        l_hat: best_k,
        model_summary: ModelSummary::TwoLine { a1, b1, a2, b2 },
        objective: best_sse,
    })
}

/// A 1-based inclusive index range.
pub type IndexRange = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub result_v: Option<ChangePointResult>,
    pub result_c: ChangePointResult,
    /// Ansari-Bradley scale test at the spline break; absent when no break
    /// candidate survived pruning.
    pub test_v: Option<ScaleTestOutcome>,
    /// Quantile/binomial test at the two-line break.
    pub test_c: TestOutcome,
    pub segments_v: Option<(IndexRange, IndexRange)>,
    pub segments_c: (IndexRange, IndexRange),
    pub alpha: f64,
}

impl SegmentationReport {
    /// Whether the spline pipeline rejects the single-regime hypothesis.
    pub fn reject_v(&self) -> bool {
        self.test_v.as_ref().map(|t| t.reject).unwrap_or(false)
    }

    pub fn reject_c(&self) -> bool {
        self.test_c.reject
    }
}

/// Runs both estimators, splits the series at each estimate and applies the
/// matching regime test.
pub fn segment(series: &TimeSeries, alpha: f64, config: &MarsConfig) -> Result<SegmentationReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let n = series.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "segmentation needs at least 10 observations, got {n}"
        )));
    }
    let detection = estimate_l_v(series, config)?;
    let result_c = estimate_l_c(series)?;

    let (result_v, test_v, segments_v) = match detection {
        Detection::NoBreak => (None, None, None),
        Detection::Found(res) => {
            let l = res.l_hat;
            let (first, second) = series.split_at_break(l);
            let outcome = ansari_bradley(
                &TimeSeries::new(first.to_vec())?,
                &TimeSeries::new(second.to_vec())?,
                alpha,
            )?;
            (Some(res), Some(outcome), Some(((1, l), (l + 1, n))))
        }
    };
    let lc = result_c.l_hat;
    let test_c = quantile_binomial_test(series, lc, alpha)?;
    Ok(SegmentationReport {
        result_v,
        result_c,
        test_v,
        test_c,
        segments_v,
        segments_c: ((1, lc), (lc + 1, n)),
        alpha,
    })
}
