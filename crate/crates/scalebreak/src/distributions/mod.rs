//! Samplers for Gaussian and Levy-stable laws, regression-type stable
//! parameter estimation, stable CDF evaluation and goodness-of-fit
//! statistics with parametric-bootstrap p-values.

mod fit;
mod gof;
mod stable;

pub use fit::{fit_stable_koutrouvelis, StableFit};
pub use gof::{
    ad_statistic, bootstrap_gof_pvalue, ks_statistic, Family, FittedParams, GaussianParams,
    GofResult,
};
pub use stable::{sample_stable, stable_cdf, StableParams};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// `n` i.i.d. draws from N(mu, sigma); the second argument is the standard
/// deviation.
pub fn sample_gaussian<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "standard deviation must be positive, got {sigma}"
        )));
    }
    let normal = Normal::new(mu, sigma)
        .map_err(|e| Error::InvalidInput(format!("bad normal parameters: {e}")))?;
    Ok(TimeSeries::from_samples(
        (0..n).map(|_| normal.sample(rng)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn gaussian_empty_and_bad_sigma() {
        let mut rng = substream(300, 0);
        assert!(sample_gaussian(0.0, 1.0, 0, &mut rng).unwrap().is_empty());
        assert!(sample_gaussian(0.0, 0.0, 5, &mut rng).is_err());
        assert!(sample_gaussian(0.0, -1.0, 5, &mut rng).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = substream(300, 1);
        let x = sample_gaussian(0.0, 2.0, 100_000, &mut rng).unwrap();
        let n = x.len() as f64;
        let mean = x.values().iter().sum::<f64>() / n;
        let sd = (x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((1.98..=2.02).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn gaussian_degenerate_spread() {
        let mut rng = substream(300, 2);
        let x = sample_gaussian(5.0, 1e-9, 10, &mut rng).unwrap();
        assert!(x.values().iter().all(|v| (v - 5.0).abs() < 1e-6));
    }
}
