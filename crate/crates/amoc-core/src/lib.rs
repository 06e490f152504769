//! At-most-one-changepoint (AMOC) tests for independent Gaussian time series.
//!
//! The crate covers the two classical settings:
//!
//! * **Mean shifts** ([`meanshift`]): cropped `Zmax`, CUSUM-max, SCUSUM,
//!   the Gaussian likelihood ratio test and the SNHT.
//! * **Trend shifts** ([`trendshift`]): mean shift under a common slope
//!   (`Dmax`), residual-CUSUM (`Hmax`), two-phase regression (`Fmax`) and
//!   the joinpoint model (`Jmax`).
//!
//! Null distributions of all statistics are functionals of Gaussian limit
//! processes (Brownian bridges and processes derived from them). The
//! [`limit`] module simulates those functionals and estimates their
//! quantiles; [`inference`] converts observed statistics into p-value
//! bounds using either embedded published quantile tables or simulated
//! ones, plus the exact Gumbel law for the LRT.
//!
//! All statistics use the time index convention `t = 1..n`; calendar
//! labels are a display mapping handled by callers.

pub mod crop;
pub mod error;
pub mod inference;
pub mod limit;
pub mod meanshift;
pub mod series;
pub mod trendshift;

pub use error::{Error, Result};
pub use series::{ols_line_fit, segment_mean, sigma_hat_null, SegmentMean, TimeSeries, TrendFit};
