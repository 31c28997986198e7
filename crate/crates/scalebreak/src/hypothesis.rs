//! Regime tests: the Ansari-Bradley rank test for a scale shift and the
//! quantile/binomial regime test applied to the squared series.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Outcome of the Ansari-Bradley scale test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTestOutcome {
    /// Sum of Ansari-Bradley ranks of the first sample, ties mid-ranked.
    pub w: f64,
    /// Normalized statistic, asymptotically standard normal under the null.
    pub w_star: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// The literal one-sided Phi(W*), direction-dependent.
    pub p_value_paper_onesided: f64,
    pub reject: bool,
    pub n_first: usize,
    pub n_second: usize,
}

/// Outcome of the quantile/binomial regime test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// The count B of second-segment squares inside the reference quantile band.
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub quantile_lo: f64,
    pub quantile_hi: f64,
}

/// Positional Ansari-Bradley ranks: assigned from each end of the joint
/// array towards the middle.
pub fn ab_ranks(total: usize) -> Result<Vec<usize>> {
    if total < 1 {
        return Err(Error::InvalidInput("rank vector needs total >= 1".into()));
    }
    let ranks = (0..total)
        .map(|i| 1 + i.min(total - 1 - i))
        .collect();
    Ok(ranks)
}

/// Ansari-Bradley test for equal scale of two samples.
///
/// The samples are pooled, sorted ascending and given the end-to-middle
/// positional ranks; tied observations receive the mean of their positional
/// ranks. `W` sums the ranks of `first`; the normalization constants use
/// n = |first|, m = |second|.
pub fn ansari_bradley(
    first: &TimeSeries,
    second: &TimeSeries,
    alpha: f64,
) -> Result<ScaleTestOutcome> {
    if first.is_empty() || second.is_empty() {
        return Err(Error::InvalidInput("both samples must be nonempty".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let n = first.len();
    let m = second.len();
    let total = n + m;

    let mut pooled: Vec<(f64, bool)> = first
        .values()
        .iter()
        .map(|&v| (v, true))
        .chain(second.values().iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let positional = ab_ranks(total)?;
    let mut ranks = vec![0.0f64; total];
    let mut i = 0;
    while i < total {
        let mut j = i + 1;
        while j < total && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let mean: f64 = positional[i..j].iter().map(|&r| r as f64).sum::<f64>() / (j - i) as f64;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = mean;
        }
        i = j;
    }
    let w: f64 = pooled
        .iter()
        .zip(&ranks)
        .filter(|((_, is_first), _)| *is_first)
        .map(|(_, &r)| r)
        .sum();

    let (nf, mf, tf) = (n as f64, m as f64, total as f64);
    let (mean, var) = if total % 2 == 0 {
        (
            nf * (tf + 2.0) / 4.0,
            nf * mf * (tf + 2.0) * (tf - 2.0) / (48.0 * (tf - 1.0)),
        )
    } else {
        (
            nf * (tf + 1.0) * (tf + 1.0) / (4.0 * tf),
            nf * mf * (tf + 1.0) * (3.0 + tf * tf) / (48.0 * tf * tf),
        )
    };
    let w_star = if var > 0.0 { (w - mean) / var.sqrt() } else { 0.0 };

    let normal = Normal::standard();
    let phi = normal.cdf(w_star);
    let p_value = (2.0 * phi.min(1.0 - phi)).min(1.0);
    Ok(ScaleTestOutcome {
        w,
        w_star,
        p_value,
        p_value_paper_onesided: phi,
        reject: p_value <= alpha,
        n_first: n,
        n_second: m,
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// log P(X = k) for X ~ Binomial(n, p).
fn ln_binom_pmf(n: u64, k: u64, p: f64) -> f64 {
    let ln_choose =
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

fn binom_two_sided_p(n: u64, b: u64, p: f64) -> f64 {
    let lower: f64 = (0..=b).map(|k| ln_binom_pmf(n, k, p).exp()).sum();
    let upper: f64 = (b..=n).map(|k| ln_binom_pmf(n, k, p).exp()).sum();
    (2.0 * lower.min(upper)).min(1.0)
}

/// Quantile/binomial regime test at a proposed split `l` (1-based).
///
/// The segment with the smaller empirical standard deviation provides the
/// reference quantile band for the squared observations; the count of the
/// other segment's squares falling inside the band is binomial with success
/// probability `1 - alpha` under a single-regime null.
pub fn quantile_binomial_test(series: &TimeSeries, l: usize, alpha: f64) -> Result<TestOutcome> {
    let n = series.len();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if l < 2 || l > n.saturating_sub(2) {
        return Err(Error::InvalidInput(format!(
            "split {l} outside [2, {}]",
            n.saturating_sub(2)
        )));
    }
    let (seg1, seg2) = series.split_at_break(l);
    let (reference, other) = if sample_std(seg1) <= sample_std(seg2) {
        (seg1, seg2)
    } else {
        (seg2, seg1)
    };
    let mut w1: Vec<f64> = reference.iter().map(|v| v * v).collect();
    w1.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q_lo = quantile_sorted(&w1, alpha / 2.0);
    let q_hi = quantile_sorted(&w1, 1.0 - alpha / 2.0);

    let b = other
        .iter()
        .map(|v| v * v)
        .filter(|w| (q_lo..=q_hi).contains(w))
        .count();
    let p_value = binom_two_sided_p(other.len() as u64, b as u64, 1.0 - alpha);
    Ok(TestOutcome {
        statistic: b as f64,
        p_value,
        reject: p_value <= alpha,
        quantile_lo: q_lo,
        quantile_hi: q_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_gaussian;
    use crate::rng::substream;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    #[test]
    fn ranks_even_odd_singleton() {
        assert_eq!(ab_ranks(4).unwrap(), vec![1, 2, 2, 1]);
        assert_eq!(ab_ranks(5).unwrap(), vec![1, 2, 3, 2, 1]);
        assert_eq!(ab_ranks(1).unwrap(), vec![1]);
        assert!(ab_ranks(0).is_err());
    }

    #[test]
    fn rank_sum_conservation() {
        for total in 2..=200usize {
            let sum: usize = ab_ranks(total).unwrap().iter().sum();
            let expected = if total % 2 == 0 {
                let k = total / 2;
                k * (k + 1)
            } else {
                let k = (total - 1) / 2;
                (k + 1) * (k + 1)
            };
            assert_eq!(sum, expected, "total {total}");
        }
    }

    #[test]
    fn hand_evaluated_even_case() {
        let out = ansari_bradley(&ts(&[10.0, -10.0]), &ts(&[-1.0, 1.0]), 0.05).unwrap();
        assert_eq!(out.w, 2.0);
        assert!((out.w_star + 1.7321).abs() < 1e-4, "w_star = {}", out.w_star);
        assert!((out.p_value - 0.0833).abs() < 5e-4);
    }

    #[test]
    fn centered_statistic_gives_unit_p() {
        let out = ansari_bradley(&ts(&[1.0, 2.0]), &ts(&[3.0, 4.0]), 0.05).unwrap();
        assert_eq!(out.w, 3.0);
        assert_eq!(out.w_star, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn complete_ties_are_symmetric() {
        let out = ansari_bradley(&ts(&[2.0; 5]), &ts(&[2.0; 7]), 0.05).unwrap();
        assert_eq!(out.w_star, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn two_vs_two_matches_permutation_oracle() {
        // every 2-vs-2 assignment of {1,2,3,4}: W must equal the sum of the
        // positional ranks [1,2,2,1] at the chosen sorted positions
        let values = [1.0, 2.0, 3.0, 4.0];
        let positional = [1.0, 2.0, 2.0, 1.0];
        for i in 0..4 {
            for j in i + 1..4 {
                let first = ts(&[values[i], values[j]]);
                let second: Vec<f64> = (0..4)
                    .filter(|&k| k != i && k != j)
                    .map(|k| values[k])
                    .collect();
                let out = ansari_bradley(&first, &ts(&second), 0.05).unwrap();
                assert_eq!(out.w, positional[i] + positional[j]);
            }
        }
    }

    #[test]
    fn scale_invariance_of_ranks() {
        let mut rng = substream(200, 0);
        let a = sample_gaussian(0.0, 1.0, 40, &mut rng).unwrap();
        let b = sample_gaussian(0.0, 2.0, 35, &mut rng).unwrap();
        let base = ansari_bradley(&a, &b, 0.05).unwrap();
        for c in [0.5f64, 3.0, 100.0] {
            let ac = ts(&a.values().iter().map(|v| c * v).collect::<Vec<_>>());
            let bc = ts(&b.values().iter().map(|v| c * v).collect::<Vec<_>>());
            let out = ansari_bradley(&ac, &bc, 0.05).unwrap();
            assert_eq!(out.w, base.w);
            assert_eq!(out.p_value, base.p_value);
        }
    }

    #[test]
    fn null_level_and_limiting_distribution() {
        let mut rejections = 0usize;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        let trials = 1000;
        for t in 0..trials {
            let mut rng = substream(201, t as u64);
            let a = sample_gaussian(0.0, 1.0, 900, &mut rng).unwrap();
            let b = sample_gaussian(0.0, 1.0, 900, &mut rng).unwrap();
            let out = ansari_bradley(&a, &b, 0.05).unwrap();
            if out.reject {
                rejections += 1;
            }
            sum += out.w_star;
            sumsq += out.w_star * out.w_star;
        }
        let rate = rejections as f64 / trials as f64;
        assert!((0.03..=0.07).contains(&rate), "rate = {rate}");
        let mean = sum / trials as f64;
        let var = sumsq / trials as f64 - mean * mean;
        assert!(mean.abs() < 0.1, "mean = {mean}");
        assert!((0.85..=1.15).contains(&var), "var = {var}");
    }

    #[test]
    fn binomial_test_null_behaviour() {
        let trials = 20;
        let mut b_sum = 0.0;
        let mut rejections = 0;
        for t in 0..trials {
            let mut rng = substream(202, t);
            let mut values = sample_gaussian(0.0, 1.0, 10000, &mut rng)
                .unwrap()
                .values()
                .to_vec();
            values.extend_from_slice(
                sample_gaussian(0.0, 1.0, 1000, &mut rng).unwrap().values(),
            );
            let series = ts(&values);
            let out = quantile_binomial_test(&series, 10000, 0.05).unwrap();
            // under H0 the reference segment is whichever half drew the
            // smaller std, so compare the in-band fraction, not the count
            let n_other = if out.statistic > 1000.0 { 10000.0 } else { 1000.0 };
            b_sum += out.statistic / n_other;
            if out.reject {
                rejections += 1;
            }
        }
        let b_mean = b_sum / trials as f64;
        assert!((0.93..=0.97).contains(&b_mean), "mean B fraction = {b_mean}");
        assert!(rejections <= 4, "{rejections} of {trials} trials rejected");
    }

    #[test]
    fn binomial_test_maximal_separation() {
        // second segment entirely above the reference band
        let mut values = vec![0.0f64; 50];
        for (i, v) in values.iter_mut().enumerate().take(50) {
            *v = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        values.extend(std::iter::repeat_n(100.0, 20));
        let series = ts(&values);
        let out = quantile_binomial_test(&series, 50, 0.05).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert!(out.p_value < 1e-10);
        assert!(out.reject);
    }

    #[test]
    fn binomial_test_split_bounds() {
        let series = ts(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(quantile_binomial_test(&series, 1, 0.05).is_err());
        assert!(quantile_binomial_test(&series, 5, 0.05).is_err());
        assert!(quantile_binomial_test(&series, 4, 0.05).is_ok());
    }

    #[test]
    fn binomial_test_scale_invariant() {
        let mut rng = substream(203, 0);
        let mut values = sample_gaussian(0.0, 1.0, 300, &mut rng)
            .unwrap()
            .values()
            .to_vec();
        values.extend_from_slice(
            sample_gaussian(0.0, 3.0, 200, &mut rng).unwrap().values(),
        );
        let series = ts(&values);
        let base = quantile_binomial_test(&series, 300, 0.05).unwrap();
        for c in [0.1f64, 2.0, 50.0] {
            let scaled = ts(&values.iter().map(|v| c * v).collect::<Vec<_>>());
            let out = quantile_binomial_test(&scaled, 300, 0.05).unwrap();
            assert_eq!(out.statistic, base.statistic);
            assert_eq!(out.p_value, base.p_value);
        }
    }

    #[test]
    fn degenerate_reference_still_defined() {
        let mut values = vec![1.0f64; 10];
        values.extend_from_slice(&[2.0, -2.0, 2.0, -2.0]);
        let series = ts(&values);
        let out = quantile_binomial_test(&series, 10, 0.05).unwrap();
        assert_eq!(out.quantile_lo, out.quantile_hi);
        assert_eq!(out.statistic, 0.0);
    }
}
