//! Levy-stable law in the S1 parameterization: Chambers-Mallows-Stuck
//! sampling and CDF evaluation through the Nolan integral representation.
//!
//! In this convention the characteristic function is
//! `exp(-sigma^a |t|^a (1 - i beta tan(pi a/2) sgn t) + i mu t)` for
//! `alpha != 1`, so `alpha = 2` is Gaussian with variance `2 sigma^2`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Parameters `(alpha, beta, sigma, mu)` of a Levy-stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidInput(format!(
                "stability index must lie in (0,2], got {alpha}"
            )));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!(
                "skewness must lie in [-1,1], got {beta}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {sigma}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidInput("location must be finite".into()));
        }
        // skewness is meaningless at the Gaussian boundary
        let beta = if alpha == 2.0 { 0.0 } else { beta };
        Ok(Self {
            alpha,
            beta,
            sigma,
            mu,
        })
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }
}

/// One standard draw (`sigma = 1`, `mu = 0`) via the
/// Chambers-Mallows-Stuck transform.
fn sample_standard<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = Exp1.sample(rng);
    if (alpha - 1.0).abs() < 1e-12 {
        let t = FRAC_PI_2 + beta * u;
        (2.0 / PI) * (t * u.tan() - beta * (FRAC_PI_2 * w * u.cos() / t).ln())
    } else {
        let bt = beta * (FRAC_PI_2 * alpha).tan();
        let b = bt.atan() / alpha;
        let s = (1.0 + bt * bt).powf(1.0 / (2.0 * alpha));
        let a_ub = alpha * (u + b);
        s * a_ub.sin() / u.cos().powf(1.0 / alpha)
            * ((u - a_ub).cos() / w).powf((1.0 - alpha) / alpha)
    }
}

/// `n` i.i.d. draws from the stable law; deterministic given the stream.
pub fn sample_stable<R: Rng + ?Sized>(
    params: &StableParams,
    n: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    let p = *params;
    StableParams::new(p.alpha, p.beta, p.sigma, p.mu)?;
    let shift = if (p.alpha - 1.0).abs() < 1e-12 {
        p.mu + (2.0 / PI) * p.beta * p.sigma * p.sigma.ln()
    } else {
        p.mu
    };
    Ok(TimeSeries::from_samples(
        (0..n)
            .map(|_| p.sigma * sample_standard(p.alpha, p.beta, rng) + shift)
            .collect(),
    ))
}

// ---------------------------------------------------------------------------
// CDF via the Nolan integral representation
// ---------------------------------------------------------------------------

/// CDF of the stable law at `x`, absolute accuracy around 1e-6.
pub fn stable_cdf(x: f64, params: &StableParams) -> f64 {
    let p = *params;
    if p.is_gaussian() {
        // S(2,0,sigma,mu) is N(mu, sqrt(2) sigma)
        let normal = Normal::standard();
        return normal.cdf((x - p.mu) / (std::f64::consts::SQRT_2 * p.sigma));
    }
    if (p.alpha - 1.0).abs() < 1e-9 {
        if p.beta == 0.0 {
            return 0.5 + ((x - p.mu) / p.sigma).atan() / PI;
        }
        // S1 -> S0 location shift at alpha = 1
        let z = (x - p.mu) / p.sigma - p.beta * (2.0 / PI) * p.sigma.ln();
        return cdf_std_alpha_one(z, p.beta).clamp(0.0, 1.0);
    }
    // S1 -> S0 location shift
    let z = (x - p.mu) / p.sigma - p.beta * (FRAC_PI_2 * p.alpha).tan();
    cdf_std(z, p.alpha, p.beta).clamp(0.0, 1.0)
}

/// Standard S0 CDF for `alpha != 1`.
fn cdf_std(z: f64, alpha: f64, beta: f64) -> f64 {
    let zeta = -beta * (FRAC_PI_2 * alpha).tan();
    if z < zeta {
        return 1.0 - cdf_std(-z, alpha, -beta);
    }
    let theta0 = (beta * (FRAC_PI_2 * alpha).tan()).atan() / alpha;
    if z - zeta < 1e-10 * (1.0 + zeta.abs()) {
        return (FRAC_PI_2 - theta0) / PI;
    }
    let a = alpha / (alpha - 1.0);
    let ln_shift = a * (z - zeta).ln();
    let ln_cos_a_t0 = (alpha * theta0).cos().ln() / (alpha - 1.0);
    // exponent of the integrand: g(theta) = (z-zeta)^a V(theta)
    let ln_g = |theta: f64| -> f64 {
        let cos_t = theta.cos();
        let sin_at = (alpha * (theta0 + theta)).sin();
        let cos_shifted = (alpha * theta0 + (alpha - 1.0) * theta).cos();
        ln_shift
            + ln_cos_a_t0
            + (a - 1.0) * cos_t.max(0.0).ln()
            - a * sin_at.max(0.0).ln()
            + cos_shifted.max(0.0).ln()
    };
    let h = |theta: f64| -> f64 {
        let lg = ln_g(theta);
        if lg.is_nan() {
            return f64::NAN;
        }
        if lg > 690.0 {
            0.0
        } else {
            (-lg.exp()).exp()
        }
    };
    let span = FRAC_PI_2 + theta0;
    let eps = span * 1e-9;
    let lo = -theta0 + eps;
    let hi = FRAC_PI_2 - eps;
    let integral = integrate_monotone(&h, lo, hi);
    if alpha < 1.0 {
        (FRAC_PI_2 - theta0) / PI + integral / PI
    } else {
        1.0 - integral / PI
    }
}

/// Standard S0 CDF at `alpha = 1`, `beta != 0`.
fn cdf_std_alpha_one(z: f64, beta: f64) -> f64 {
    if beta < 0.0 {
        return 1.0 - cdf_std_alpha_one(-z, -beta);
    }
    let scale = (-PI * z / (2.0 * beta)).exp();
    let ln_g = |theta: f64| -> f64 {
        let t = FRAC_PI_2 + beta * theta;
        scale.ln()
            + (2.0 / PI * t / theta.cos()).ln()
            + (1.0 / beta) * t * theta.tan()
    };
    let h = |theta: f64| -> f64 {
        let lg = ln_g(theta);
        if lg.is_nan() {
            return f64::NAN;
        }
        if lg > 690.0 {
            0.0
        } else {
            (-lg.exp()).exp()
        }
    };
    let eps = PI * 1e-9;
    integrate_monotone(&h, -FRAC_PI_2 + eps, FRAC_PI_2 - eps) / PI
}

/// Integrates a monotone integrand in [0,1] by splitting at the point where
/// it crosses 1/e and applying adaptive Simpson on each side.
fn integrate_monotone(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let f_lo = sanitize(h, lo, hi, lo);
    let f_hi = sanitize(h, lo, hi, hi);
    // bisect for h = 1/e
    let target = (-1.0f64).exp();
    let mut split = 0.5 * (lo + hi);
    if (f_lo - target) * (f_hi - target) < 0.0 {
        let (mut a, mut b) = (lo, hi);
        let rising = f_hi > f_lo;
        for _ in 0..40 {
            split = 0.5 * (a + b);
            let fm = sanitize(h, lo, hi, split);
            let below = fm < target;
            if below == rising {
                a = split;
            } else {
                b = split;
            }
        }
    }
    adaptive_simpson(h, lo, split, 1e-8, 30) + adaptive_simpson(h, split, hi, 1e-8, 30)
}

/// Replaces a NaN endpoint value by a nearby interior evaluation.
fn sanitize(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64, theta: f64) -> f64 {
    let v = h(theta);
    if v.is_nan() {
        let nudge = (hi - lo) * 1e-7;
        let inner = if theta - lo < hi - theta {
            theta + nudge
        } else {
            theta - nudge
        };
        let v2 = h(inner);
        if v2.is_nan() {
            0.5
        } else {
            v2
        }
    } else {
        v
    }
}

fn adaptive_simpson(h: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fa = sanitize(h, a, b, a);
    let fb = sanitize(h, a, b, b);
    let fm = sanitize(h, a, b, m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(h, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    h: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = sanitize(h, a, b, lm);
    let frm = sanitize(h, a, b, rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(h, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(h, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}
