//! Time-series container and the null-hypothesis estimators shared by all
//! tests: segment means, the pooled variance estimate and the ordinary
//! least squares line fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered real observations with optional calendar labels.
///
/// Internally every statistic uses the time index `t = 1..n`; labels (for
/// example years) are carried along purely for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    labels: Option<Vec<f64>>,
}

impl TimeSeries {
    /// Build a series without calendar labels. Requires `n >= 2` and all
    /// values finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    /// Build a series with calendar labels, which must be strictly
    /// increasing and of the same length as the values.
    pub fn with_labels(values: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        Self::build(values, Some(labels))
    }

    fn build(values: Vec<f64>, labels: Option<Vec<f64>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {}",
                pos + 1
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(Error::InvalidSeries(format!(
                    "{} labels for {} values",
                    labels.len(),
                    values.len()
                )));
            }
            if labels.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidSeries(
                    "labels must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { values, labels })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Calendar label for the 1-based time index `t`, when labels exist.
    pub fn label_at(&self, t: usize) -> Option<f64> {
        self.labels.as_ref().map(|l| l[t - 1])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }
}

/// Arithmetic mean of an inclusive 1-based index segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMean {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
}

/// Least squares fit of `x_t = mu + alpha * t` over `t = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    /// Intercept at `t = 0` in data units.
    pub mu_hat: f64,
    /// Slope in data units per time index.
    pub alpha_hat: f64,
    /// Residuals `x_t - (mu_hat + alpha_hat * t)`; they sum to zero.
    pub residuals: Vec<f64>,
    /// Residual standard deviation with the 1/(n-2) divisor.
    pub sigma_eps_hat: f64,
}

impl TrendFit {
    /// True when the data lie exactly on a line, in which case every
    /// studentized trend statistic is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.sigma_eps_hat == 0.0
    }
}

/// Sample mean of `x[a..=b]` (1-based, inclusive).
pub fn segment_mean(x: &TimeSeries, a: usize, b: usize) -> Result<SegmentMean> {
    let n = x.n();
    if a < 1 || a > b || b > n {
        return Err(Error::IndexOutOfRange { start: a, end: b, n });
    }
    let sum: f64 = x.values()[a - 1..b].iter().sum();
    Ok(SegmentMean {
        start: a,
        end: b,
        mean: sum / (b - a + 1) as f64,
    })
}

/// Null-hypothesis variance estimate with the 1/(n-1) divisor.
///
/// Returns `DegenerateVariance` for a constant series; every studentized
/// test divides by this quantity.
pub fn sigma_hat_null(x: &TimeSeries) -> Result<f64> {
    let n = x.n() as f64;
    let first = x.values()[0];
    if x.values().iter().all(|v| *v == first) {
        return Err(Error::DegenerateVariance(
            "constant series has zero sample variance".into(),
        ));
    }
    let mean = x.mean();
    let ss: f64 = x.values().iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1.0);
    if var == 0.0 {
        return Err(Error::DegenerateVariance(
            "constant series has zero sample variance".into(),
        ));
    }
    Ok(var)
}

/// Closed-form least squares line fit over `t = 1..n`:
///
/// ```text
/// alpha_hat = 12 * sum t (x_t - mean) / (n (n+1) (n-1))
/// mu_hat    = mean - alpha_hat * (n+1)/2
/// ```
///
/// The fit is returned even when the data are an exact line; callers that
/// studentize must check [`TrendFit::is_degenerate`].
pub fn ols_line_fit(x: &TimeSeries) -> Result<TrendFit> {
    let n = x.n();
    if n < 3 {
        return Err(Error::InvalidSeries(format!(
            "line fit needs n >= 3, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = x.mean();
    let num: f64 = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * (v - mean))
        .sum();
    let alpha_hat = 12.0 * num / (nf * (nf + 1.0) * (nf - 1.0));
    let mu_hat = mean - alpha_hat * (nf + 1.0) / 2.0;
    let residuals: Vec<f64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v - (mu_hat + alpha_hat * (i + 1) as f64))
        .collect();
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let mut sigma_eps_hat = (ss / (nf - 2.0)).sqrt();
    // residuals at the rounding floor mean the data are an exact line;
    // snap the scale to zero so degeneracy is detectable
    let scale = x.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sigma_eps_hat <= 1e-12 * scale {
        sigma_eps_hat = 0.0;
    }
    Ok(TrendFit {
        mu_hat,
        alpha_hat,
        residuals,
        sigma_eps_hat,
    })
}
