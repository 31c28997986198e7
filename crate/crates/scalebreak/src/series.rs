//! Foundational statistics over a raw series: the sample median, the
//! cumulative absolute-deviation-about-median statistic `V` and the
//! cumulative second-moment statistic `C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, finite sequence of real observations.
///
/// Order is meaningful; no operation reorders the values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty series".into()));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at position {idx}"
            )));
        }
        Ok(Self { values })
    }

    /// Builds a possibly-empty series (used by samplers where n = 0 is legal).
    pub fn from_samples(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The two halves split after index `l` (1-based): `[1, l]` and `[l+1, n]`.
    pub fn split_at_break(&self, l: usize) -> (&[f64], &[f64]) {
        self.values.split_at(l)
    }
}

/// Which cumulative diagnostic a [`CumulativeStat`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKind {
    /// Cumulative absolute deviation about the full-sample median.
    V,
    /// Cumulative sum of squares.
    C,
}

/// A cumulative diagnostic statistic evaluated at every prefix of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeStat {
    pub kind: StatKind,
    /// `values[j-1]` is the statistic over the prefix of length `j`.
    pub values: Vec<f64>,
    /// The centering constant: the full-sample median for `V`, 0 for `C`.
    pub center: f64,
}

/// Sample median: middle order statistic for odd n, mean of the two middle
/// order statistics for even n.
pub fn median(series: &TimeSeries) -> f64 {
    median_of(series.values())
}

pub(crate) fn median_of(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// `V_j = sum_{i<=j} |X_i - median(X)|` for j = 1..n.
pub fn v_statistics(series: &TimeSeries) -> CumulativeStat {
    let med = median(series);
    let mut acc = 0.0f64;
    let values = series
        .values()
        .iter()
        .map(|x| {
            acc += (x - med).abs();
            acc
        })
        .collect();
    CumulativeStat {
        kind: StatKind::V,
        values,
        center: med,
    }
}

/// `C_j = sum_{i<=j} X_i^2` for j = 1..n.
pub fn c_statistics(series: &TimeSeries) -> CumulativeStat {
    let mut acc = 0.0f64;
    let values = series
        .values()
        .iter()
        .map(|x| {
            acc += x * x;
            acc
        })
        .collect();
    CumulativeStat {
        kind: StatKind::C,
        values,
        center: 0.0,
    }
}
