//! Univariate adaptive regression splines: hinge-pair basis construction,
//! greedy forward least-squares expansion and backward pruning under
//! generalized cross-validation.
//!
//! The forward pass scores every candidate knot through the Gram matrix of
//! the current basis. Because all basis columns are hinges, inner products
//! against a candidate pair reduce to prefix/suffix sums over the sorted
//! predictor, so one step costs O(candidates * p^2) instead of
//! O(candidates * p * N).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HingeDirection {
    /// `(x - knot)_+`
    Plus,
    /// `(knot - x)_+`
    Minus,
}

/// A hockey-stick basis function with a single knot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeBasis {
    pub knot: f64,
    pub direction: HingeDirection,
}

impl HingeBasis {
    pub fn eval(&self, x: f64) -> f64 {
        hinge_eval(self, x)
    }
}

pub fn hinge_eval(basis: &HingeBasis, x: f64) -> f64 {
    match basis.direction {
        HingeDirection::Plus => (x - basis.knot).max(0.0),
        HingeDirection::Minus => (basis.knot - x).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarsTerm {
    pub basis: HingeBasis,
    pub coefficient: f64,
}

/// A fitted spline model: intercept plus hinge terms, with the fit
/// diagnostics produced during selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub intercept: f64,
    pub terms: Vec<MarsTerm>,
    pub gcv: f64,
    pub rss: f64,
    /// Effective parameter count M(lambda) used in the GCV denominator.
    pub effective_params: f64,
}

impl MarsModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept
            + self
                .terms
                .iter()
                .map(|t| t.coefficient * t.basis.eval(x))
                .sum::<f64>()
    }

    /// Distinct knot values present in the model, ascending.
    pub fn knots(&self) -> Vec<f64> {
        let mut ks: Vec<f64> = self.terms.iter().map(|t| t.basis.knot).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarsConfig {
    /// Maximum number of hinge terms retained by the forward pass.
    pub max_terms: usize,
    /// Candidate-knot thinning stride; raised automatically for large inputs.
    pub knot_stride: usize,
    /// GCV penalty per distinct knot.
    pub penalty_per_knot: f64,
}

impl Default for MarsConfig {
    fn default() -> Self {
        Self {
            max_terms: 21,
            knot_stride: 1,
            penalty_per_knot: 3.0,
        }
    }
}

impl MarsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 3 {
            return Err(Error::InvalidInput(
                "max_terms must be at least 3".into(),
            ));
        }
        if self.knot_stride == 0 {
            return Err(Error::InvalidInput("knot_stride must be positive".into()));
        }
        if !(self.penalty_per_knot >= 0.0) {
            return Err(Error::InvalidInput(
                "penalty_per_knot must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Caps the candidate count at roughly 2000 knots for large inputs.
    pub fn effective_stride(&self, n: usize) -> usize {
        self.knot_stride.max(n.div_ceil(2000))
    }
}

/// The distinct observed values, every `stride`-th after sorting. The last
/// value is always retained.
pub fn candidate_knots(xs: &[f64], stride: usize) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty predictor vector".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be positive".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let last = *sorted.last().unwrap();
    let mut out: Vec<f64> = sorted.iter().copied().step_by(stride).collect();
    if *out.last().unwrap() != last {
        out.push(last);
    }
    Ok(out)
}

/// `rss / (n * (1 - M/n)^2)` with `M = n_terms + penalty_per_knot * n_knots`.
pub fn gcv_score(
    rss: f64,
    n_obs: usize,
    n_terms: usize,
    n_knots: usize,
    penalty_per_knot: f64,
) -> Result<f64> {
    let n = n_obs as f64;
    let m = n_terms as f64 + penalty_per_knot * n_knots as f64;
    if m >= n {
        return Err(Error::DegenerateModel(format!(
            "effective parameters {m} >= observations {n}"
        )));
    }
    let denom = 1.0 - m / n;
    Ok(rss / (n * denom * denom))
}

fn gcv_or_inf(rss: f64, n_obs: usize, n_terms: usize, n_knots: usize, penalty: f64) -> f64 {
    gcv_score(rss, n_obs, n_terms, n_knots, penalty).unwrap_or(f64::INFINITY)
}

// ---------------------------------------------------------------------------
// internal fitting state
// ---------------------------------------------------------------------------

/// Prefix/suffix sums of a column against the sorted predictor, enabling
/// O(1) inner products with any hinge column.
struct ColumnStats {
    values: Vec<f64>, // unit-norm, sorted order
    suf_w: Vec<f64>,
    suf_xw: Vec<f64>,
    pre_w: Vec<f64>,
    pre_xw: Vec<f64>,
}

impl ColumnStats {
    fn build(values: Vec<f64>, xs: &[f64]) -> Self {
        let n = values.len();
        let mut suf_w = vec![0.0; n + 1];
        let mut suf_xw = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suf_w[i] = suf_w[i + 1] + values[i];
            suf_xw[i] = suf_xw[i + 1] + xs[i] * values[i];
        }
        let mut pre_w = vec![0.0; n + 1];
        let mut pre_xw = vec![0.0; n + 1];
        for i in 0..n {
            pre_w[i + 1] = pre_w[i] + values[i];
            pre_xw[i + 1] = pre_xw[i] + xs[i] * values[i];
        }
        Self {
            values,
            suf_w,
            suf_xw,
            pre_w,
            pre_xw,
        }
    }

    /// Inner product with `(x - t)_+`; `i` is the first sorted index with x > t.
    fn dot_plus(&self, t: f64, i: usize) -> f64 {
        self.suf_xw[i] - t * self.suf_w[i]
    }

    /// Inner product with `(t - x)_+`; `i` is the first sorted index with x >= t.
    fn dot_minus(&self, t: f64, i: usize) -> f64 {
        t * self.pre_w[i] - self.pre_xw[i]
    }
}

struct FitColumn {
    basis: Option<HingeBasis>, // None for the intercept
    scale: f64,                // L2 norm of the raw column
    stats: ColumnStats,
}

struct FitState {
    n: usize,
    xs: Vec<f64>, // ascending
    ys: Vec<f64>, // co-sorted with xs
    yty: f64,
    // moment sums of the bare predictor, for candidate self-products
    suf_1: Vec<f64>,
    suf_x: Vec<f64>,
    suf_x2: Vec<f64>,
    pre_1: Vec<f64>,
    pre_x: Vec<f64>,
    pre_x2: Vec<f64>,
    y_stats: ColumnStats,
    cols: Vec<FitColumn>,
    gram: Vec<f64>, // p x p over cols, row-major
    rhs: Vec<f64>,  // cols^T y
}

impl FitState {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
        let xs_s: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let ys_s: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
        let yty = linalg::dot(&ys_s, &ys_s);

        let mut suf_1 = vec![0.0; n + 1];
        let mut suf_x = vec![0.0; n + 1];
        let mut suf_x2 = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suf_1[i] = suf_1[i + 1] + 1.0;
            suf_x[i] = suf_x[i + 1] + xs_s[i];
            suf_x2[i] = suf_x2[i + 1] + xs_s[i] * xs_s[i];
        }
        let mut pre_1 = vec![0.0; n + 1];
        let mut pre_x = vec![0.0; n + 1];
        let mut pre_x2 = vec![0.0; n + 1];
        for i in 0..n {
            pre_1[i + 1] = pre_1[i] + 1.0;
            pre_x[i + 1] = pre_x[i] + xs_s[i];
            pre_x2[i + 1] = pre_x2[i] + xs_s[i] * xs_s[i];
        }
        let y_stats = ColumnStats::build(ys_s.clone(), &xs_s);
        let mut state = Self {
            n,
            xs: xs_s,
            ys: ys_s,
            yty,
            suf_1,
            suf_x,
            suf_x2,
            pre_1,
            pre_x,
            pre_x2,
            y_stats,
            cols: Vec::new(),
            gram: Vec::new(),
            rhs: Vec::new(),
        };
        state.push_column(None);
        state
    }

    fn raw_column(&self, basis: Option<&HingeBasis>) -> Vec<f64> {
        match basis {
            None => vec![1.0; self.n],
            Some(b) => self.xs.iter().map(|&x| b.eval(x)).collect(),
        }
    }

    fn push_column(&mut self, basis: Option<HingeBasis>) {
        let raw = self.raw_column(basis.as_ref());
        let scale = linalg::dot(&raw, &raw).sqrt().max(f64::MIN_POSITIVE);
        let values: Vec<f64> = raw.iter().map(|v| v / scale).collect();

        let p = self.cols.len();
        let mut new_gram = vec![0.0; (p + 1) * (p + 1)];
        for i in 0..p {
            for j in 0..p {
                new_gram[i * (p + 1) + j] = self.gram[i * p + j];
            }
        }
        for (i, col) in self.cols.iter().enumerate() {
            let d = linalg::dot(&col.stats.values, &values);
            new_gram[i * (p + 1) + p] = d;
            new_gram[p * (p + 1) + i] = d;
        }
        new_gram[p * (p + 1) + p] = linalg::dot(&values, &values);
        self.gram = new_gram;
        self.rhs.push(linalg::dot(&values, &self.ys));

        let stats = ColumnStats::build(values, &self.xs);
        self.cols.push(FitColumn {
            basis,
            scale,
            stats,
        });
    }

    fn sub_gram(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let p = self.cols.len();
        let k = idx.len();
        let mut g = vec![0.0; k * k];
        let mut b = vec![0.0; k];
        for (a, &i) in idx.iter().enumerate() {
            b[a] = self.rhs[i];
            for (c, &j) in idx.iter().enumerate() {
                g[a * k + c] = self.gram[i * p + j];
            }
        }
        (g, b)
    }

    /// Gram-based solve; the returned RSS is suitable for ranking but not for
    /// reporting (cancellation against y^T y).
    fn solve_subset(&self, idx: &[usize]) -> (Vec<f64>, f64) {
        let (g, b) = self.sub_gram(idx);
        let beta = linalg::solve_sym(&g, idx.len(), &b);
        let rss = (self.yty - linalg::dot(&b, &beta)).max(0.0);
        (beta, rss)
    }

    /// Coefficients with one iterative-refinement step and an exact residual
    /// pass for the RSS.
    fn exact_fit(&self, idx: &[usize]) -> (Vec<f64>, f64) {
        let (g, b) = self.sub_gram(idx);
        let k = idx.len();
        let mut beta = linalg::solve_sym(&g, k, &b);
        let mut rss = 0.0;
        for _ in 0..2 {
            let resid = self.residuals(idx, &beta);
            rss = linalg::dot(&resid, &resid);
            let corr: Vec<f64> = idx
                .iter()
                .map(|&i| linalg::dot(&self.cols[i].stats.values, &resid))
                .collect();
            let delta = linalg::solve_sym(&g, k, &corr);
            for (bi, di) in beta.iter_mut().zip(&delta) {
                *bi += di;
            }
        }
        let resid = self.residuals(idx, &beta);
        let refined = linalg::dot(&resid, &resid);
        if refined < rss {
            rss = refined;
        }
        (beta, rss)
    }

    fn residuals(&self, idx: &[usize], beta: &[f64]) -> Vec<f64> {
        let mut r = self.ys.clone();
        for (&i, &bi) in idx.iter().zip(beta) {
            for (ri, v) in r.iter_mut().zip(&self.cols[i].stats.values) {
                *ri -= bi * v;
            }
        }
        r
    }

    fn model_from(&self, idx: &[usize], beta: &[f64], rss: f64, penalty: f64) -> MarsModel {
        let mut intercept = 0.0;
        let mut terms = Vec::new();
        for (&i, &bi) in idx.iter().zip(beta) {
            let col = &self.cols[i];
            let coef = bi / col.scale;
            match col.basis {
                None => intercept = coef,
                Some(basis) => terms.push(MarsTerm {
                    basis,
                    coefficient: coef,
                }),
            }
        }
        let n_knots = distinct_knots(&terms);
        let m = (terms.len() + 1) as f64 + penalty * n_knots as f64;
        let gcv = gcv_or_inf(rss, self.n, terms.len() + 1, n_knots, penalty);
        MarsModel {
            intercept,
            terms,
            gcv,
            rss,
            effective_params: m,
        }
    }

    /// Best reflected hinge pair to add, by residual-sum-of-squares
    /// reduction. Ties go to the smallest knot; collinear candidates are
    /// skipped.
    fn best_pair(&self, candidates: &[f64], used: &[f64]) -> Option<(f64, f64)> {
        let p = self.cols.len();
        let chol = Cholesky::factor(&self.gram, p)?;
        let u = chol.solve_lower(&self.rhs);
        let utu = linalg::dot(&u, &u);
        let _ = utu;

        let mut best: Option<(f64, f64)> = None;
        let mut b_plus = vec![0.0; p];
        let mut b_minus = vec![0.0; p];
        for &t in candidates {
            if used.iter().any(|&k| k == t) {
                continue;
            }
            let i_plus = self.xs.partition_point(|&x| x <= t);
            let i_minus = self.xs.partition_point(|&x| x < t);
            let pp = self.suf_x2[i_plus] - 2.0 * t * self.suf_x[i_plus]
                + t * t * self.suf_1[i_plus];
            let mm = t * t * self.pre_1[i_minus] - 2.0 * t * self.pre_x[i_minus]
                + self.pre_x2[i_minus];
            let floor = 1e-12 * (self.suf_x2[0] + t * t * self.pre_1[self.n]).max(1.0);
            if pp <= floor || mm <= floor {
                continue; // boundary knot: one side of the pair is the zero column
            }
            for (k, col) in self.cols.iter().enumerate() {
                b_plus[k] = col.stats.dot_plus(t, i_plus);
                b_minus[k] = col.stats.dot_minus(t, i_minus);
            }
            let xp = chol.solve_lower(&b_plus);
            let xm = chol.solve_lower(&b_minus);
            let s11 = pp - linalg::dot(&xp, &xp);
            let s22 = mm - linalg::dot(&xm, &xm);
            let s12 = -linalg::dot(&xp, &xm);
            if s11 <= 1e-10 * pp || s22 <= 1e-10 * mm {
                continue;
            }
            let det = s11 * s22 - s12 * s12;
            if det <= 1e-12 * s11 * s22 {
                continue;
            }
            let v1 = self.y_stats.dot_plus(t, i_plus) - linalg::dot(&xp, &u);
            let v2 = self.y_stats.dot_minus(t, i_minus) - linalg::dot(&xm, &u);
            let reduction = (s22 * v1 * v1 - 2.0 * s12 * v1 * v2 + s11 * v2 * v2) / det;
            if !reduction.is_finite() {
                continue;
            }
            match best {
                Some((_, r)) if reduction <= r => {}
                _ => best = Some((t, reduction)),
            }
        }
        best
    }
}

fn distinct_knots(terms: &[MarsTerm]) -> usize {
    let mut ks: Vec<f64> = terms.iter().map(|t| t.basis.knot).collect();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks.dedup();
    ks.len()
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "predictor/response length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput(
            "spline fit needs at least 3 observations".into(),
        ));
    }
    Ok(())
}

/// Greedy forward expansion: repeatedly adds the reflected hinge pair that
/// maximally reduces the residual sum of squares, refitting all coefficients
/// at each step.
pub fn forward_pass(xs: &[f64], ys: &[f64], config: &MarsConfig) -> Result<MarsModel> {
    check_inputs(xs, ys)?;
    config.validate()?;
    let n = xs.len();
    let stride = config.effective_stride(n);
    let candidates = candidate_knots(xs, stride)?;

    let mut state = FitState::new(xs, ys);
    let all: Vec<usize> = vec![0];
    let (mut beta, mut rss) = state.exact_fit(&all);
    let mut idx = all;
    let mut used: Vec<f64> = Vec::new();

    loop {
        let n_terms = idx.len() - 1;
        if n_terms + 2 > config.max_terms {
            break;
        }
        // keep the GCV denominator valid for the grown model
        let next_m =
            (n_terms + 2 + 1) as f64 + config.penalty_per_knot * (used.len() + 1) as f64;
        if next_m >= n as f64 {
            break;
        }
        if rss <= 1e-20 * state.yty.max(1.0) {
            break;
        }
        let Some((knot, reduction)) = state.best_pair(&candidates, &used) else {
            break;
        };
        if reduction < 1e-10 * rss {
            break;
        }
        state.push_column(Some(HingeBasis {
            knot,
            direction: HingeDirection::Plus,
        }));
        state.push_column(Some(HingeBasis {
            knot,
            direction: HingeDirection::Minus,
        }));
        idx.push(idx.len());
        idx.push(idx.len());
        used.push(knot);
        let fit = state.exact_fit(&idx);
        beta = fit.0;
        rss = fit.1;
    }
    Ok(state.model_from(&idx, &beta, rss, config.penalty_per_knot))
}

/// Backward pruning: deletes the term whose removal least increases the RSS,
/// refitting after each deletion, and returns the model with minimal GCV over
/// the whole deletion path (the input model included).
pub fn backward_prune(
    model: &MarsModel,
    xs: &[f64],
    ys: &[f64],
    config: &MarsConfig,
) -> Result<MarsModel> {
    check_inputs(xs, ys)?;
    config.validate()?;
    let mut state = FitState::new(xs, ys);
    for term in &model.terms {
        state.push_column(Some(term.basis));
    }
    let mut idx: Vec<usize> = (0..state.cols.len()).collect();
    let (beta, rss) = state.exact_fit(&idx);
    let mut best_model = state.model_from(&idx, &beta, rss, config.penalty_per_knot);

    while idx.len() > 1 {
        let mut choice: Option<(usize, f64)> = None;
        for pos in 1..idx.len() {
            let reduced: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &i)| i)
                .collect();
            let (_, rss_gram) = state.solve_subset(&reduced);
            match choice {
                Some((_, r)) if rss_gram >= r => {}
                _ => choice = Some((pos, rss_gram)),
            }
        }
        let (pos, _) = choice.unwrap();
        idx.remove(pos);
        let (beta, rss) = state.exact_fit(&idx);
        let candidate = state.model_from(&idx, &beta, rss, config.penalty_per_knot);
        if candidate.gcv < best_model.gcv {
            best_model = candidate;
        }
    }
    Ok(best_model)
}

/// Forward expansion followed by backward pruning. Deterministic given the
/// inputs and configuration.
pub fn fit_mars(xs: &[f64], ys: &[f64], config: &MarsConfig) -> Result<MarsModel> {
    let grown = forward_pass(xs, ys, config)?;
    backward_prune(&grown, xs, ys, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn grid(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    #[test]
    fn hinge_eval_both_sides() {
        let plus = HingeBasis {
            knot: 3.0,
            direction: HingeDirection::Plus,
        };
        let minus = HingeBasis {
            knot: 3.0,
            direction: HingeDirection::Minus,
        };
        assert_eq!(plus.eval(5.0), 2.0);
        assert_eq!(plus.eval(2.0), 0.0);
        assert_eq!(minus.eval(2.0), 1.0);
    }

    #[test]
    fn candidate_knots_distinct_and_thinned() {
        assert_eq!(
            candidate_knots(&[1.0, 2.0, 2.0, 3.0], 1).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            candidate_knots(&grid(10), 3).unwrap(),
            vec![1.0, 4.0, 7.0, 10.0]
        );
        assert_eq!(candidate_knots(&[7.0], 1).unwrap(), vec![7.0]);
        assert!(candidate_knots(&[], 1).is_err());
    }

    #[test]
    fn gcv_hand_values() {
        assert_eq!(gcv_score(0.0, 10, 3, 1, 3.0).unwrap(), 0.0);
        // rss=2, n=2, M=1 -> 2 / (2 * 0.25) = 4
        let g = gcv_score(2.0, 2, 1, 0, 3.0).unwrap();
        assert!((g - 4.0).abs() < 1e-12);
        assert!(gcv_score(1.0, 4, 2, 1, 3.0).is_err());
    }

    #[test]
    fn gcv_penalty_monotone() {
        let lo = gcv_score(5.0, 100, 3, 1, 3.0).unwrap();
        let hi = gcv_score(5.0, 100, 7, 3, 3.0).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn forward_recovers_noiseless_hinge() {
        let xs = grid(10);
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 + 2.0 * (x - 5.0f64).max(0.0)).collect();
        let model = forward_pass(&xs, &ys, &MarsConfig::default()).unwrap();
        assert!(model.knots().contains(&5.0), "knots: {:?}", model.knots());
        assert!(model.rss < 1e-18, "rss = {}", model.rss);
    }

    #[test]
    fn forward_constant_response_is_intercept_only() {
        let xs = grid(20);
        let ys = vec![4.25; 20];
        let model = forward_pass(&xs, &ys, &MarsConfig::default()).unwrap();
        assert!(model.terms.is_empty());
        assert!((model.intercept - 4.25).abs() < 1e-12);
    }

    #[test]
    fn forward_recovers_two_slope_shape() {
        // two-line shape: slope beta1 before the break, -beta2 after
        let xs = grid(10);
        let (b0, b1, b2, l) = (10.0, 2.0, 1.0, 5.0);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| b0 + b1 * (x - l).max(0.0) + b2 * (l - x).max(0.0))
            .collect();
        let model = forward_pass(&xs, &ys, &MarsConfig::default()).unwrap();
        assert!(model.knots().contains(&5.0));
        for (&x, &y) in xs.iter().zip(&ys) {
            assert!((model.predict(x) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn prune_keeps_true_knot_pair() {
        // forward pass is forced to overfit noiseless hinge data with spare
        // capacity; pruning must fall back to the single true pair
        let xs = grid(40);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| 1.0 + 0.5 * (x - 17.0f64).max(0.0))
            .collect();
        let model = fit_mars(&xs, &ys, &MarsConfig::default()).unwrap();
        assert_eq!(model.knots(), vec![17.0]);
        assert!(model.rss < 1e-16);
    }

    #[test]
    fn prune_zero_terms_unchanged() {
        let xs = grid(10);
        let ys = vec![2.0; 10];
        let model = forward_pass(&xs, &ys, &MarsConfig::default()).unwrap();
        let pruned = backward_prune(&model, &xs, &ys, &MarsConfig::default()).unwrap();
        assert!(pruned.terms.is_empty());
        assert!((pruned.intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn prune_removes_duplicate_term() {
        let xs = grid(12);
        let basis = HingeBasis {
            knot: 6.0,
            direction: HingeDirection::Plus,
        };
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 + basis.eval(x)).collect();
        let model = MarsModel {
            intercept: 1.0,
            terms: vec![
                MarsTerm {
                    basis,
                    coefficient: 0.5,
                },
                MarsTerm {
                    basis,
                    coefficient: 0.5,
                },
            ],
            gcv: f64::INFINITY,
            rss: 0.0,
            effective_params: 0.0,
        };
        let pruned = backward_prune(&model, &xs, &ys, &MarsConfig::default()).unwrap();
        assert_eq!(pruned.terms.len(), 1);
        assert!(pruned.rss < 1e-16);
    }

    #[test]
    fn fit_linear_data_matches_ols_line() {
        for n in [100usize, 1800] {
            let xs = grid(n);
            let ys: Vec<f64> = xs.iter().map(|&x| -1.5 + 0.25 * x).collect();
            let model = fit_mars(&xs, &ys, &MarsConfig::default()).unwrap();
            for (&x, &y) in xs.iter().zip(&ys) {
                assert!(
                    (model.predict(x) - y).abs() < 1e-9,
                    "n={n} x={x} err={}",
                    (model.predict(x) - y).abs()
                );
            }
        }
    }

    #[test]
    fn fit_noise_gcv_not_worse_than_forward() {
        let xs = grid(1800);
        let mut rng = crate::rng::substream(11, 0);
        let ys: Vec<f64> = (0..1800).map(|_| rng.random::<f64>() - 0.5).collect();
        let cfg = MarsConfig::default();
        let grown = forward_pass(&xs, &ys, &cfg).unwrap();
        let pruned = backward_prune(&grown, &xs, &ys, &cfg).unwrap();
        assert!(pruned.gcv <= grown.gcv);
    }

    #[test]
    fn forward_rss_nonincreasing_in_max_terms() {
        let xs = grid(200);
        let mut rng = crate::rng::substream(12, 0);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| (x / 40.0).sin() + 0.1 * (rng.random::<f64>() - 0.5))
            .collect();
        let mut prev = f64::INFINITY;
        for max_terms in [3usize, 5, 9, 13, 21] {
            let cfg = MarsConfig {
                max_terms,
                ..MarsConfig::default()
            };
            let model = forward_pass(&xs, &ys, &cfg).unwrap();
            assert!(model.rss <= prev + 1e-9 * (1.0 + prev.abs()));
            prev = model.rss;
        }
    }

    #[test]
    fn deterministic_fit() {
        let xs = grid(300);
        let mut rng = crate::rng::substream(13, 0);
        let ys: Vec<f64> = (0..300)
            .map(|i| if i < 150 { 1.0 } else { 3.0 } * rng.random::<f64>())
            .collect();
        let a = fit_mars(&xs, &ys, &MarsConfig::default()).unwrap();
        let b = fit_mars(&xs, &ys, &MarsConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(forward_pass(&grid(5), &grid(4), &MarsConfig::default()).is_err());
    }
}
