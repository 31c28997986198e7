//! Kolmogorov-Smirnov and Anderson-Darling statistics against a fitted
//! reference law, with parametric-bootstrap p-values.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::series::TimeSeries;

use super::fit::fit_stable_koutrouvelis;
use super::stable::{sample_stable, stable_cdf, StableParams};
use super::sample_gaussian;

/// Candidate families for the goodness-of-fit comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Stable,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

/// Parameters of whichever family was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedParams {
    Stable(StableParams),
    Gaussian(GaussianParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub family: Family,
    pub fitted: FittedParams,
    pub ks: f64,
    pub ad: f64,
    pub ks_p: f64,
    pub ad_p: f64,
}

fn sorted_values(series: &TimeSeries) -> Vec<f64> {
    let mut sorted = series.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
}

/// KS distance from CDF values already evaluated at the sorted sample.
fn ks_from_cdf(f_vals: &[f64]) -> f64 {
    let n = f_vals.len() as f64;
    let mut sup = 0.0f64;
    for (i, &f) in f_vals.iter().enumerate() {
        let f = f.clamp(0.0, 1.0);
        sup = sup.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    sup
}

/// A-squared from CDF values already evaluated at the sorted sample.
fn ad_from_cdf(f_vals: &[f64]) -> f64 {
    let n = f_vals.len();
    let nf = n as f64;
    let mut acc = 0.0f64;
    for i in 0..n {
        let fi = f_vals[i].clamp(0.0, 1.0);
        let fr = f_vals[n - 1 - i].clamp(0.0, 1.0);
        if fi <= 0.0 || fr >= 1.0 {
            return f64::INFINITY;
        }
        acc += (2.0 * i as f64 + 1.0) * (fi.ln() + (1.0 - fr).ln());
    }
    -nf - acc / nf
}

/// Kolmogorov-Smirnov distance between the empirical CDF and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(series: &TimeSeries, cdf: F) -> f64 {
    let f_vals: Vec<f64> = sorted_values(series).iter().map(|&x| cdf(x)).collect();
    ks_from_cdf(&f_vals)
}

/// Anderson-Darling A-squared; +infinity when a sample point sits exactly at
/// the model's CDF boundary.
pub fn ad_statistic<F: Fn(f64) -> f64>(series: &TimeSeries, cdf: F) -> f64 {
    let f_vals: Vec<f64> = sorted_values(series).iter().map(|&x| cdf(x)).collect();
    ad_from_cdf(&f_vals)
}

/// Number of exact evaluations per tail in the interpolated path; tails
/// drive the AD statistic, so they are never interpolated.
const TAIL_EXACT: usize = 40;
/// Interior grid size for the interpolated stable-CDF path.
const GRID: usize = 600;

/// CDF values at the sorted sample. Cheap families are evaluated exactly;
/// the numerically integrated stable CDF is evaluated on a quantile-spread
/// grid (plus exact tails) and interpolated linearly in between — the
/// interior CDF increment between grid neighbours is ~1/GRID, so the
/// interpolation error is far below the sampling noise of the statistics.
fn eval_cdf_sorted(fitted: &FittedParams, sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let cheap = match fitted {
        FittedParams::Gaussian(_) => true,
        FittedParams::Stable(p) => p.alpha == 2.0 || n <= GRID + 2 * TAIL_EXACT,
    };
    let cdf = cdf_of(fitted);
    if cheap {
        return sorted.iter().map(|&x| cdf(x)).collect();
    }
    let lo = TAIL_EXACT;
    let hi = n - TAIL_EXACT; // exclusive start of the upper exact tail
    let mut f_vals = vec![f64::NAN; n];
    for i in (0..lo).chain(hi..n) {
        f_vals[i] = cdf(sorted[i]);
    }
    let interior = hi - lo;
    let steps = GRID.min(interior.saturating_sub(1)).max(1);
    let mut prev_idx = lo;
    f_vals[prev_idx] = cdf(sorted[prev_idx]);
    for s in 1..=steps {
        let idx = lo + (interior - 1) * s / steps;
        if idx == prev_idx {
            continue;
        }
        f_vals[idx] = cdf(sorted[idx]);
        let (x0, x1) = (sorted[prev_idx], sorted[idx]);
        let (f0, f1) = (f_vals[prev_idx], f_vals[idx]);
        for j in prev_idx + 1..idx {
            f_vals[j] = if x1 > x0 {
                f0 + (f1 - f0) * (sorted[j] - x0) / (x1 - x0)
            } else {
                f0
            };
        }
        prev_idx = idx;
    }
    f_vals
}

fn fit_family(series: &TimeSeries, family: Family) -> Result<FittedParams> {
    match family {
        Family::Gaussian => {
            let n = series.len();
            if n < 2 {
                return Err(Error::InsufficientData(
                    "Gaussian fit needs at least 2 observations".into(),
                ));
            }
            let nf = n as f64;
            let mu = series.values().iter().sum::<f64>() / nf;
            let var = series
                .values()
                .iter()
                .map(|x| (x - mu) * (x - mu))
                .sum::<f64>()
                / (nf - 1.0);
            if var <= 0.0 {
                return Err(Error::DegenerateModel(
                    "zero-variance sample cannot be fitted".into(),
                ));
            }
            Ok(FittedParams::Gaussian(GaussianParams {
                mu,
                sigma: var.sqrt(),
            }))
        }
        Family::Stable => Ok(FittedParams::Stable(
            fit_stable_koutrouvelis(series)?.params,
        )),
    }
}

fn cdf_of(fitted: &FittedParams) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |x| match fitted {
        FittedParams::Gaussian(g) => {
            let normal = statrs::distribution::Normal::new(g.mu, g.sigma).unwrap();
            statrs::distribution::ContinuousCDF::cdf(&normal, x)
        }
        FittedParams::Stable(p) => stable_cdf(x, p),
    }
}

fn sample_of<R: Rng + ?Sized>(fitted: &FittedParams, n: usize, rng: &mut R) -> Result<TimeSeries> {
    match fitted {
        FittedParams::Gaussian(g) => sample_gaussian(g.mu, g.sigma, n, rng),
        FittedParams::Stable(p) => sample_stable(p, n, rng),
    }
}

/// Fits `family` to the series, then calibrates KS/AD p-values by refitting
/// `b` parametric resamples of the fitted law. Replicates run in parallel on
/// substreams seeded from `rng`, so results do not depend on thread order.
pub fn bootstrap_gof_pvalue<R: Rng + ?Sized>(
    series: &TimeSeries,
    family: Family,
    b: usize,
    rng: &mut R,
) -> Result<GofResult> {
    if b < 100 {
        return Err(Error::InvalidInput(format!(
            "bootstrap needs at least 100 replicates, got {b}"
        )));
    }
    if series.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let n = series.len();
    let fitted = fit_family(series, family)?;
    let (ks_obs, ad_obs) = {
        let f_vals = eval_cdf_sorted(&fitted, &sorted_values(series));
        (ks_from_cdf(&f_vals), ad_from_cdf(&f_vals))
    };

    let base_seed: u64 = rng.random();
    let stats: Vec<(f64, f64)> = (0..b as u64)
        .into_par_iter()
        .map(|rep| {
            let mut sub = substream(base_seed, rep);
            let resample = sample_of(&fitted, n, &mut sub)?;
            let refit = fit_family(&resample, family)?;
            let f_vals = eval_cdf_sorted(&refit, &sorted_values(&resample));
            Ok((ks_from_cdf(&f_vals), ad_from_cdf(&f_vals)))
        })
        .collect::<Result<_>>()?;

    let ks_ge = stats.iter().filter(|(ks, _)| *ks >= ks_obs).count();
    let ad_ge = stats.iter().filter(|(_, ad)| *ad >= ad_obs).count();
    let denom = (b + 1) as f64;
    Ok(GofResult {
        family,
        fitted,
        ks: ks_obs,
        ad: ad_obs,
        ks_p: (1.0 + ks_ge as f64) / denom,
        ad_p: (1.0 + ad_ge as f64) / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn ks_single_point() {
        let s = TimeSeries::new(vec![0.0]).unwrap();
        let d = ks_statistic(&s, |_| 0.5);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_model_quantiles() {
        // sample at exactly the model quantiles (i-0.5)/n of the uniform CDF
        let n = 20;
        let s = TimeSeries::new(
            (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
        )
        .unwrap();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn ks_total_mismatch() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((ks_statistic(&s, |_| 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ad_single_point() {
        let s = TimeSeries::new(vec![0.0]).unwrap();
        let a = ad_statistic(&s, |_| 0.5);
        let expect = 2.0 * std::f64::consts::LN_2 - 1.0;
        assert!((a - expect).abs() < 1e-12, "a = {a}");
    }

    #[test]
    fn ad_boundary_is_infinite() {
        let s = TimeSeries::new(vec![1.0, 2.0]).unwrap();
        let a = ad_statistic(&s, |x| if x > 1.5 { 1.0 } else { 0.4 });
        assert!(a.is_infinite());
    }

    #[test]
    fn ad_null_calibration() {
        // draws evaluated against their own fitted law keep A^2 small
        let mut big = 0;
        for rep in 0..50 {
            let mut rng = substream(400, rep);
            let s = sample_gaussian(0.0, 1.0, 2000, &mut rng).unwrap();
            let fitted = fit_family(&s, Family::Gaussian).unwrap();
            let cdf = cdf_of(&fitted);
            if ad_statistic(&s, cdf) > 2.5 {
                big += 1;
            }
        }
        assert_eq!(big, 0, "{big} of 50 replicates exceeded 2.5");
    }

    #[test]
    fn bootstrap_rejects_small_b() {
        let mut rng = substream(401, 0);
        let s = sample_gaussian(0.0, 1.0, 300, &mut rng).unwrap();
        assert!(matches!(
            bootstrap_gof_pvalue(&s, Family::Gaussian, 50, &mut rng),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn bootstrap_null_calibration_gaussian() {
        let mut means = 0.0;
        let reps = 20;
        for rep in 0..reps {
            let mut rng = substream(402, rep);
            let s = sample_gaussian(1.0, 3.0, 400, &mut rng).unwrap();
            let res = bootstrap_gof_pvalue(&s, Family::Gaussian, 100, &mut rng).unwrap();
            means += res.ks_p;
        }
        let mean = means / reps as f64;
        assert!((0.3..=0.7).contains(&mean), "mean ks_p = {mean}");
    }

    #[test]
    fn bootstrap_separates_heavy_tails() {
        let truth = StableParams::new(1.8, 0.0, 1.0, 0.0).unwrap();
        let mut rng = substream(403, 0);
        let s = sample_stable(&truth, 5000, &mut rng).unwrap();
        let res = bootstrap_gof_pvalue(&s, Family::Gaussian, 100, &mut rng).unwrap();
        assert!(res.ks_p < 0.05, "ks_p = {}", res.ks_p);
        assert!(res.ad_p < 0.05, "ad_p = {}", res.ad_p);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let run = || {
            let mut rng = substream(404, 0);
            let s = sample_gaussian(0.0, 1.0, 300, &mut rng).unwrap();
            bootstrap_gof_pvalue(&s, Family::Gaussian, 100, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.ks_p, b.ks_p);
        assert_eq!(a.ad_p, b.ad_p);
    }
}
