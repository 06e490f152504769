//! Mean-shift AMOC statistics: cropped `Zmax`, the CUSUM process with its
//! maximum, SCUSUM, the Gaussian likelihood ratio test and the SNHT.
//!
//! All candidates split the series into `{1..k}` and `{k+1..n}` for
//! `1 <= k < n`. Argmax ties resolve to the smallest `k`.

use serde::{Deserialize, Serialize};

use crate::crop::admissible_range;
use crate::error::{Error, Result};
use crate::series::{sigma_hat_null, TimeSeries};

/// How studentized statistics obtain the noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaMode {
    /// Plug in the null-hypothesis estimate with the 1/(n-1) divisor.
    Estimated,
    /// Use a known standard deviation.
    Known(f64),
}

impl SigmaMode {
    fn resolve(&self, x: &TimeSeries) -> Result<f64> {
        match self {
            SigmaMode::Estimated => Ok(sigma_hat_null(x)?.sqrt()),
            SigmaMode::Known(s) => {
                if !(*s > 0.0) || !s.is_finite() {
                    return Err(Error::DomainError(format!(
                        "known sigma must be positive and finite, got {s}"
                    )));
                }
                Ok(*s)
            }
        }
    }
}

/// The mean-shift test a [`MeanShiftOutcome`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanShiftTest {
    Zmax,
    CusumMax,
    Scusum,
    Lrt,
    Snht,
}

/// The CUSUM process `CUSUM_k = (sum_{t<=k} x_t - (k/n) sum_t x_t) / sqrt(n)`
/// for `k = 1..n`, optionally divided by a noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumTrace {
    /// `values[k-1]` holds `CUSUM_k`; the last entry is exactly zero.
    pub values: Vec<f64>,
    /// Whether the values were divided by sigma.
    pub standardized: bool,
}

/// Result of a mean-shift test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftOutcome {
    pub test: MeanShiftTest,
    pub statistic: f64,
    /// Estimated changepoint: last index of the first segment (1-based).
    pub tau_hat: usize,
    /// Cropping fraction; 0 when the test is uncropped.
    pub delta: f64,
    pub sigma_mode: SigmaMode,
    /// Candidates excluded because a segment variance vanished (LRT only).
    pub skipped: Vec<usize>,
}

/// Compute the CUSUM trace. `sigma = None` leaves the raw process,
/// otherwise values are divided by the resolved noise scale.
pub fn cusum_process(x: &TimeSeries, sigma: Option<SigmaMode>) -> Result<CusumTrace> {
    let scale = match &sigma {
        Some(mode) => mode.resolve(x)?,
        None => 1.0,
    };
    let n = x.n();
    let nf = n as f64;
    let mean = x.mean();
    let sqrt_n = nf.sqrt();
    // centered partial sums keep the arithmetic well conditioned and make
    // the final value an exact zero
    let mut values = Vec::with_capacity(n);
    let mut partial = 0.0;
    let centered_total: f64 = x.values().iter().map(|v| v - mean).sum();
    for (i, v) in x.values().iter().enumerate() {
        partial += v - mean;
        let k = (i + 1) as f64;
        values.push((partial - (k / nf) * centered_total) / (sqrt_n * scale));
    }
    Ok(CusumTrace {
        values,
        standardized: sigma.is_some(),
    })
}

/// `Z_k` for every `k = 1..n-1` using the appendix identity
/// `sigma Z_k = CUSUM_k / sqrt((k/n)(1 - k/n))`.
pub fn z_values(x: &TimeSeries, sigma: SigmaMode) -> Result<Vec<f64>> {
    let trace = cusum_process(x, Some(sigma))?;
    let n = x.n() as f64;
    Ok(trace.values[..x.n() - 1]
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let t = (i + 1) as f64 / n;
            c / (t * (1.0 - t)).sqrt()
        })
        .collect())
}

/// Cropped maximum of `|Z_k|` with the plug-in variance estimate.
pub fn zmax_test(x: &TimeSeries, delta: f64) -> Result<MeanShiftOutcome> {
    zmax_test_with(x, delta, SigmaMode::Estimated)
}

/// Cropped maximum of `|Z_k|` with an explicit sigma mode.
pub fn zmax_test_with(x: &TimeSeries, delta: f64, sigma: SigmaMode) -> Result<MeanShiftOutcome> {
    let n = x.n();
    let (lo, hi) = admissible_range(n, Some(delta), 1, n - 1)?;
    let z = z_values(x, sigma)?;
    let (tau_hat, statistic) = argmax_abs((lo..=hi).map(|k| (k, z[k - 1]))).expect("nonempty");
    Ok(MeanShiftOutcome {
        test: MeanShiftTest::Zmax,
        statistic: statistic.abs(),
        tau_hat,
        delta,
        sigma_mode: sigma,
        skipped: Vec::new(),
    })
}

/// Uncropped maximum of the studentized `|CUSUM_k|`.
pub fn cusum_max_test(x: &TimeSeries) -> Result<MeanShiftOutcome> {
    cusum_max_test_with(x, SigmaMode::Estimated)
}

pub fn cusum_max_test_with(x: &TimeSeries, sigma: SigmaMode) -> Result<MeanShiftOutcome> {
    let trace = cusum_process(x, Some(sigma))?;
    let n = x.n();
    let (tau_hat, statistic) =
        argmax_abs((1..n).map(|k| (k, trace.values[k - 1]))).expect("nonempty");
    Ok(MeanShiftOutcome {
        test: MeanShiftTest::CusumMax,
        statistic: statistic.abs(),
        tau_hat,
        delta: 0.0,
        sigma_mode: sigma,
        skipped: Vec::new(),
    })
}

/// SCUSUM statistic `n^{-1} sum_{k=1..n} CUSUM_k^2 / sigma^2`. The
/// changepoint estimate is still the argmax of `|CUSUM_k|`.
pub fn scusum_test(x: &TimeSeries) -> Result<MeanShiftOutcome> {
    scusum_test_with(x, SigmaMode::Estimated)
}

pub fn scusum_test_with(x: &TimeSeries, sigma: SigmaMode) -> Result<MeanShiftOutcome> {
    let trace = cusum_process(x, Some(sigma))?;
    let n = x.n();
    let statistic = trace.values.iter().map(|c| c * c).sum::<f64>() / n as f64;
    let (tau_hat, _) = argmax_abs((1..n).map(|k| (k, trace.values[k - 1]))).expect("nonempty");
    Ok(MeanShiftOutcome {
        test: MeanShiftTest::Scusum,
        statistic,
        tau_hat,
        delta: 0.0,
        sigma_mode: sigma,
        skipped: Vec::new(),
    })
}

/// Per-candidate LRT values `l_k = n ln(sigma2_H0 / sigma2_Hk)` with the
/// 1/n maximum likelihood divisors. Candidates whose pooled segment
/// variance vanishes are `None`.
pub fn lrt_values(x: &TimeSeries) -> Result<Vec<Option<f64>>> {
    let n = x.n();
    let nf = n as f64;
    let mean = x.mean();
    let centered: Vec<f64> = x.values().iter().map(|v| v - mean).collect();
    let total_ss: f64 = centered.iter().map(|v| v * v).sum();
    let sigma2_h0 = total_ss / nf;
    if sigma2_h0 == 0.0 {
        return Err(Error::DegenerateVariance(
            "constant series: sigma2 under H0 is zero".into(),
        ));
    }
    let mut out = Vec::with_capacity(n - 1);
    let mut sum1 = 0.0;
    let mut ss1 = 0.0;
    // running sums over the first segment; second segment by complement
    let total_sum: f64 = centered.iter().sum();
    for (i, v) in centered[..n - 1].iter().enumerate() {
        sum1 += v;
        ss1 += v * v;
        let k = (i + 1) as f64;
        let seg1 = (ss1 - sum1 * sum1 / k).max(0.0);
        let sum2 = total_sum - sum1;
        let ss2 = total_ss - ss1;
        let seg2 = (ss2 - sum2 * sum2 / (nf - k)).max(0.0);
        let sigma2_hk = (seg1 + seg2) / nf;
        if sigma2_hk == 0.0 {
            out.push(None);
        } else {
            out.push(Some((nf * (sigma2_h0 / sigma2_hk).ln()).max(0.0)));
        }
    }
    Ok(out)
}

/// Likelihood ratio statistic `l_max`, optionally cropped. Degenerate
/// candidates are excluded and recorded in `skipped`.
pub fn lrt_test(x: &TimeSeries, delta: Option<f64>) -> Result<MeanShiftOutcome> {
    let n = x.n();
    if n < 4 {
        return Err(Error::InvalidSeries(format!("LRT needs n >= 4, got {n}")));
    }
    let (lo, hi) = admissible_range(n, delta, 1, n - 1)?;
    let values = lrt_values(x)?;
    let mut skipped = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        match values[k - 1] {
            None => skipped.push(k),
            Some(l) => {
                if best.map_or(true, |(_, b)| l > b) {
                    best = Some((k, l));
                }
            }
        }
    }
    let (tau_hat, statistic) = best.ok_or_else(|| {
        Error::DegenerateVariance("every LRT candidate has a zero segment variance".into())
    })?;
    Ok(MeanShiftOutcome {
        test: MeanShiftTest::Lrt,
        statistic,
        tau_hat,
        delta: delta.unwrap_or(0.0),
        sigma_mode: SigmaMode::Estimated,
        skipped,
    })
}

/// Per-candidate SNHT values `k xbar_{1:k}^2 + (n-k) xbar_{k+1:n}^2` for
/// `k = 1..n-1`. The data are treated as unit variance; no rescaling.
pub fn snht_values(x: &TimeSeries) -> Result<Vec<f64>> {
    let n = x.n();
    let nf = n as f64;
    let total: f64 = x.values().iter().sum();
    let mut out = Vec::with_capacity(n - 1);
    let mut sum1 = 0.0;
    for (i, v) in x.values()[..n - 1].iter().enumerate() {
        sum1 += v;
        let k = (i + 1) as f64;
        let m1 = sum1 / k;
        let m2 = (total - sum1) / (nf - k);
        out.push(k * m1 * m1 + (nf - k) * m2 * m2);
    }
    Ok(out)
}

/// SNHT statistic: the maximum of [`snht_values`].
pub fn snht_test(x: &TimeSeries) -> Result<MeanShiftOutcome> {
    let values = snht_values(x)?;
    let mut best = (1usize, values[0]);
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > best.1 {
            best = (i + 1, *v);
        }
    }
    Ok(MeanShiftOutcome {
        test: MeanShiftTest::Snht,
        statistic: best.1,
        tau_hat: best.0,
        delta: 0.0,
        sigma_mode: SigmaMode::Known(1.0),
        skipped: Vec::new(),
    })
}

/// Known-variance likelihood ratio `-2 ln Lambda_k` at a fixed candidate:
/// the reduction in sum of squares from allowing a mean shift at `k`,
/// divided by `sigma2`. Used to relate the SNHT to the Gaussian LRT.
pub fn neg_two_log_lambda_known_sigma(x: &TimeSeries, k: usize, sigma2: f64) -> Result<f64> {
    let n = x.n();
    if k < 1 || k >= n {
        return Err(Error::IndexOutOfRange {
            start: k,
            end: k,
            n,
        });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::DomainError("sigma2 must be positive".into()));
    }
    let mean = x.mean();
    let ss_total: f64 = x.values().iter().map(|v| (v - mean) * (v - mean)).sum();
    let m1 = x.values()[..k].iter().sum::<f64>() / k as f64;
    let m2 = x.values()[k..].iter().sum::<f64>() / (n - k) as f64;
    let ss1: f64 = x.values()[..k].iter().map(|v| (v - m1) * (v - m1)).sum();
    let ss2: f64 = x.values()[k..].iter().map(|v| (v - m2) * (v - m2)).sum();
    Ok((ss_total - ss1 - ss2) / sigma2)
}

/// Smallest-index argmax of `|value|`; returns the signed value.
fn argmax_abs(iter: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in iter {
        match best {
            Some((_, b)) if v.abs() <= b.abs() => {}
            _ => best = Some((k, v)),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    const STEP: [f64; 6] = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];

    #[test]
    fn cusum_trace_values() {
        let zeros = ts(&[0.0; 5]);
        let trace = cusum_process(&zeros, None).unwrap();
        assert!(trace.values.iter().all(|v| *v == 0.0));
        assert!(!trace.standardized);

        let x = ts(&STEP);
        let raw = cusum_process(&x, None).unwrap();
        assert!((raw.values[2] - (-1.5 / 6.0f64.sqrt())).abs() < 1e-12);
        assert_eq!(*raw.values.last().unwrap(), 0.0);

        let std = cusum_process(&x, Some(SigmaMode::Estimated)).unwrap();
        assert!((std.values[2] - (-1.118033988749895)).abs() < 1e-12);
        assert!(std.standardized);
    }

    #[test]
    fn zmax_step_series() {
        let x = ts(&STEP);
        let out = zmax_test(&x, 0.05).unwrap();
        // |Z_3| = 1/sqrt(0.3 * (1/3 + 1/3)) = sqrt(5), confirmed by scanning Eq. (2)
        assert!((out.statistic - 5.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(out.tau_hat, 3);
        let c = ts(&[2.0; 6]);
        assert!(matches!(
            zmax_test(&c, 0.05),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn zmax_brute_force_argmax() {
        // exhaustive evaluation of Eq. (2) over the cropped range
        let x = ts(&[0.4, -0.8, 1.3, 2.6, 3.1, 2.7, 2.2, 3.0, 2.4, 2.9]);
        let sigma = sigma_hat_null(&x).unwrap().sqrt();
        let n = x.n();
        let out = zmax_test(&x, 0.05).unwrap();
        let mut best = (0usize, 0.0f64);
        for k in 2..=n - 2 {
            let m1 = x.values()[..k].iter().sum::<f64>() / k as f64;
            let m2 = x.values()[k..].iter().sum::<f64>() / (n - k) as f64;
            let z = (m1 - m2) / (sigma * (1.0 / k as f64 + 1.0 / (n - k) as f64).sqrt());
            if z.abs() > best.1.abs() {
                best = (k, z);
            }
        }
        assert_eq!(out.tau_hat, best.0);
        assert!((out.statistic - best.1.abs()).abs() < 1e-12);
    }

    #[test]
    fn cusum_max_step_series() {
        let x = ts(&STEP);
        let out = cusum_max_test(&x).unwrap();
        assert!((out.statistic - 1.118033988749895).abs() < 1e-12);
        assert_eq!(out.tau_hat, 3);
        assert!(matches!(
            cusum_max_test(&ts(&[0.0; 4])),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn scusum_step_series() {
        let x = ts(&STEP);
        let out = scusum_test(&x).unwrap();
        // hand summation: (0.25 + 1 + 2.25 + 1 + 0.25 + 0)/6 / 0.3 / 6
        assert!((out.statistic - (4.75 / 6.0) / 0.3 / 6.0).abs() < 1e-12);
        assert_eq!(out.tau_hat, 3);
        assert!(matches!(
            scusum_test(&ts(&[1.0; 4])),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn lrt_tie_and_degenerate_split() {
        // exhaustive evaluation over k = 1..5 gives 6 ln 2 at k = 2 and k = 4
        let x = ts(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let out = lrt_test(&x, None).unwrap();
        assert!((out.statistic - 6.0 * 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(out.tau_hat, 2, "ties resolve to the smallest k");
        assert!(out.skipped.is_empty());

        // perfect split: k = 3 has zero pooled segment variance
        let y = ts(&STEP);
        let out = lrt_test(&y, None).unwrap();
        assert_eq!(out.skipped, vec![3]);
        assert!(out.statistic.is_finite());
    }

    #[test]
    fn snht_values_and_ties() {
        let zeros = ts(&[0.0; 6]);
        assert_eq!(snht_test(&zeros).unwrap().statistic, 0.0);

        let x = ts(&STEP);
        let out = snht_test(&x).unwrap();
        assert!((out.statistic - 3.0).abs() < 1e-12);
        assert_eq!(out.tau_hat, 3);

        let ones = ts(&[1.0; 4]);
        let out = snht_test(&ones).unwrap();
        assert!((out.statistic - 4.0).abs() < 1e-12);
        assert_eq!(out.tau_hat, 1, "constant-mean evaluation ties at every k");
    }

    #[test]
    fn known_sigma_modes() {
        let x = ts(&STEP);
        let out = zmax_test_with(&x, 0.05, SigmaMode::Known(1.0)).unwrap();
        // unstandardized |Z_3| = 1/sqrt(2/3)
        assert!((out.statistic - (1.5f64).sqrt()).abs() < 1e-12);
        assert!(matches!(
            zmax_test_with(&x, 0.05, SigmaMode::Known(0.0)),
            Err(Error::DomainError(_))
        ));
    }
}
