//! Scale-break segmentation for one-dimensional signals.
//!
//! The toolkit detects a single change in scale (variance / dispersion) in a
//! time series by fitting an adaptive piecewise-linear model to cumulative
//! statistics of the data, then validates the split with distribution-free
//! scale tests and heavy-tailed distribution fits.

pub mod changepoint;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod hypothesis;
pub mod mars;
pub mod series;
pub mod simlab;

mod linalg;
pub mod rng;

pub use changepoint::{segment, Detection, Method, SegmentationReport};
pub use error::{Error, Result};
pub use mars::{fit_mars, MarsConfig, MarsModel};
pub use series::{StatKind, TimeSeries};
