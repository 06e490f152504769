//! Trend-shift AMOC statistics under the null model `x_t = mu + alpha t + eps_t`:
//!
//! * `Dmax` — mean shift with a common slope in both regimes,
//! * `Hmax` — CUSUM of the null-fit residuals (no cropping needed),
//! * `Fmax` — two-phase regression (Chow-type maximal F),
//! * `Jmax` — joinpoint model where the two lines meet at the changepoint.
//!
//! Candidates for `Fmax`/`Jmax` are restricted to `2 <= k <= n-2` so each
//! segment supports a slope. Argmax ties resolve to the smallest `k`.

use serde::{Deserialize, Serialize};

use crate::crop::admissible_range;
use crate::error::{Error, Result};
use crate::series::{ols_line_fit, TimeSeries, TrendFit};

/// The trend-shift test a [`TrendShiftOutcome`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendShiftTest {
    Dmax,
    Hmax,
    Fmax,
    Jmax,
}

/// Two-phase regression at a fixed split: separate lines on `{1..k}` and
/// `{k+1..n}` against the single-line reduced fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseFit {
    pub k: usize,
    pub mu1: f64,
    pub alpha1: f64,
    pub mu2: f64,
    pub alpha2: f64,
    pub mu_red: f64,
    pub alpha_red: f64,
    pub sse_full: f64,
    pub sse_red: f64,
}

/// Joinpoint slope-change estimate at a fixed split, via the closed-form
/// linear representation in `V1 = sum x`, `V2 = sum t x`,
/// `V3 = sum_{t>k} (t-k) x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinpointFit {
    pub k: usize,
    /// Estimated slope change.
    pub beta_hat: f64,
    /// Exact finite-sample variance of `beta_hat` under unit noise
    /// variance, from the induced linear weights.
    pub var_beta_exact: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    /// Normalizer `M = (ab - nd)^2 - (a^2 - nc)(b^2 - ne)`.
    pub m: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

/// Fitted coefficients reported alongside `Fmax`/`Jmax` outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRecord {
    TwoPhase(TwoPhaseFit),
    /// Joinpoint fit plus the jointly refitted constrained model: the left
    /// line is `mu + alpha t`, the right line has slope `alpha + beta` and
    /// meets the left line at `t = k`.
    Joinpoint {
        fit: JoinpointFit,
        mu: f64,
        alpha: f64,
        beta: f64,
    },
}

/// Result of a trend-shift test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendShiftOutcome {
    pub test: TrendShiftTest,
    pub statistic: f64,
    /// Estimated changepoint: last index of the first regime (1-based).
    pub tau_hat: usize,
    /// Cropping fraction; 0 when the test is uncropped.
    pub delta: f64,
    pub fits: Option<FitRecord>,
    /// Candidates excluded for a vanishing full-model SSE (Fmax only).
    pub skipped: Vec<usize>,
}

/// Unit-variance variance of the regime intercept difference
/// `mu_hat_{k+1:n} - mu_hat_{1:k}` when both use the common slope:
/// `(1/(n-k) + 1/k) - 3n/((n+1)(n-1))`.
pub fn var_mu_diff(n: usize, k: usize) -> f64 {
    debug_assert!(n >= 3 && (1..n).contains(&k));
    let (nf, kf) = (n as f64, k as f64);
    (1.0 / (nf - kf) + 1.0 / kf) - 3.0 * nf / ((nf + 1.0) * (nf - 1.0))
}

/// Correlation of `D_k` and `D_l` for `k <= l`:
/// `[n/((n-k) l) - 3n/((n+1)(n-1))] / sqrt(var_mu_diff(n,k) var_mu_diff(n,l))`.
pub fn cov_dkdl(n: usize, k: usize, l: usize) -> f64 {
    debug_assert!(k <= l);
    if k == l {
        return 1.0;
    }
    let (nf, kf, lf) = (n as f64, k as f64, l as f64);
    let num = nf / ((nf - kf) * lf) - 3.0 * nf / ((nf + 1.0) * (nf - 1.0));
    num / (var_mu_diff(n, k) * var_mu_diff(n, l)).sqrt()
}

fn nondegenerate_fit(x: &TimeSeries) -> Result<TrendFit> {
    let fit = ols_line_fit(x)?;
    if fit.is_degenerate() {
        return Err(Error::DegenerateVariance(
            "data lie exactly on a line; trend statistics are undefined".into(),
        ));
    }
    Ok(fit)
}

/// `D_k` for `k = 1..n-1`: studentized difference of regime intercept
/// estimates under the common null slope. Both intercepts reduce to
/// segment means of the null-fit residuals, computed here directly.
pub fn d_values(x: &TimeSeries) -> Result<Vec<f64>> {
    let fit = nondegenerate_fit(x)?;
    let sigma2 = fit.sigma_eps_hat * fit.sigma_eps_hat;
    let n = x.n();
    let total: f64 = fit.residuals.iter().sum();
    let mut out = Vec::with_capacity(n - 1);
    let mut sum1 = 0.0;
    for (i, r) in fit.residuals[..n - 1].iter().enumerate() {
        sum1 += r;
        let k = i + 1;
        let m1 = sum1 / k as f64;
        let m2 = (total - sum1) / (n - k) as f64;
        out.push((m2 - m1) / (sigma2 * var_mu_diff(n, k)).sqrt());
    }
    Ok(out)
}

/// Cropped maximum of `|D_k|`.
pub fn dmax_test(x: &TimeSeries, delta: f64) -> Result<TrendShiftOutcome> {
    let n = x.n();
    let (lo, hi) = admissible_range(n, Some(delta), 1, n - 1)?;
    let d = d_values(x)?;
    let (tau_hat, statistic) = argmax_abs((lo..=hi).map(|k| (k, d[k - 1]))).expect("nonempty");
    Ok(TrendShiftOutcome {
        test: TrendShiftTest::Dmax,
        statistic: statistic.abs(),
        tau_hat,
        delta,
        fits: None,
        skipped: Vec::new(),
    })
}

/// Residual-CUSUM values `|sum_{t<=k} eps_hat_t| / (sigma_eps sqrt(n))`
/// before taking the absolute value, for `k = 1..n-1`.
pub fn h_values(x: &TimeSeries) -> Result<Vec<f64>> {
    let fit = nondegenerate_fit(x)?;
    let n = x.n();
    let scale = fit.sigma_eps_hat * (n as f64).sqrt();
    let mut out = Vec::with_capacity(n - 1);
    let mut partial = 0.0;
    for r in &fit.residuals[..n - 1] {
        partial += r;
        out.push(partial / scale);
    }
    Ok(out)
}

/// Uncropped maximum of the residual CUSUM.
pub fn hmax_test(x: &TimeSeries) -> Result<TrendShiftOutcome> {
    let h = h_values(x)?;
    let (tau_hat, statistic) =
        argmax_abs(h.iter().enumerate().map(|(i, v)| (i + 1, *v))).expect("nonempty");
    Ok(TrendShiftOutcome {
        test: TrendShiftTest::Hmax,
        statistic: statistic.abs(),
        tau_hat,
        delta: 0.0,
        fits: None,
        skipped: Vec::new(),
    })
}

fn segment_line(values: &[f64], t_start: usize) -> (f64, f64, f64) {
    // per-segment OLS with within-segment centering; returns (mu, alpha, sse)
    let len = values.len() as f64;
    let mean_x: f64 = values.iter().sum::<f64>() / len;
    let mean_t: f64 = (t_start as f64 + (t_start + values.len() - 1) as f64) / 2.0;
    let mut sxt = 0.0;
    let mut stt = 0.0;
    for (i, v) in values.iter().enumerate() {
        let dt = (t_start + i) as f64 - mean_t;
        sxt += dt * (v - mean_x);
        stt += dt * dt;
    }
    let alpha = sxt / stt;
    let mu = mean_x - alpha * mean_t;
    let sse: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = v - (mu + alpha * (t_start + i) as f64);
            r * r
        })
        .sum();
    (mu, alpha, sse)
}

/// Separate-line fits on `{1..k}` and `{k+1..n}` plus the reduced single
/// line, with their sums of squared errors. Requires `2 <= k <= n-2`.
pub fn two_phase_fit(x: &TimeSeries, k: usize) -> Result<TwoPhaseFit> {
    let n = x.n();
    if k < 2 || k + 2 > n {
        return Err(Error::IndexOutOfRange {
            start: k,
            end: k,
            n,
        });
    }
    let (mu1, alpha1, sse1) = segment_line(&x.values()[..k], 1);
    let (mu2, alpha2, sse2) = segment_line(&x.values()[k..], k + 1);
    let red = ols_line_fit(x)?;
    let sse_red: f64 = red.residuals.iter().map(|r| r * r).sum();
    Ok(TwoPhaseFit {
        k,
        mu1,
        alpha1,
        mu2,
        alpha2,
        mu_red: red.mu_hat,
        alpha_red: red.alpha_hat,
        sse_full: sse1 + sse2,
        sse_red,
    })
}

/// Exact sums of `t` and `t^2` over `a..=b`.
fn t_sums(a: usize, b: usize) -> (f64, f64) {
    let s = |m: usize| -> (f64, f64) {
        let mf = m as f64;
        (
            mf * (mf + 1.0) / 2.0,
            mf * (mf + 1.0) * (2.0 * mf + 1.0) / 6.0,
        )
    };
    let (s1b, s2b) = s(b);
    let (s1a, s2a) = s(a - 1);
    (s1b - s1a, s2b - s2a)
}

/// Chow-type `F_k` for `k = 2..n-2` (index `i` holds `k = i + 2`).
/// `None` marks candidates whose full-model SSE vanishes.
///
/// Computed on the residuals of the reduced fit; both models absorb any
/// line, so the F values are unchanged while the arithmetic stays well
/// conditioned.
pub fn f_values(x: &TimeSeries) -> Result<Vec<Option<f64>>> {
    let n = x.n();
    if n < 6 {
        return Err(Error::InvalidSeries(format!("Fmax needs n >= 6, got {n}")));
    }
    let red = ols_line_fit(x)?;
    let r = &red.residuals;
    let nf = n as f64;

    let mut cum_r = vec![0.0; n + 1];
    let mut cum_tr = vec![0.0; n + 1];
    let mut cum_rr = vec![0.0; n + 1];
    for (i, v) in r.iter().enumerate() {
        cum_r[i + 1] = cum_r[i] + v;
        cum_tr[i + 1] = cum_tr[i] + (i + 1) as f64 * v;
        cum_rr[i + 1] = cum_rr[i] + v * v;
    }
    let seg_sse = |a: usize, b: usize| -> f64 {
        let len = (b - a + 1) as f64;
        let sr = cum_r[b] - cum_r[a - 1];
        let str_ = cum_tr[b] - cum_tr[a - 1];
        let srr = cum_rr[b] - cum_rr[a - 1];
        let (st, st2) = t_sums(a, b);
        let stt = st2 - st * st / len;
        let sxt = str_ - st * sr / len;
        (srr - sr * sr / len - sxt * sxt / stt).max(0.0)
    };

    let (st, st2) = t_sums(1, n);
    let stt_g = st2 - st * st / nf;
    let sxt_g = cum_tr[n] - st * cum_r[n] / nf;
    let sse_red = (cum_rr[n] - cum_r[n] * cum_r[n] / nf - sxt_g * sxt_g / stt_g).max(0.0);

    let mut out = Vec::with_capacity(n - 3);
    for k in 2..=n - 2 {
        let sse_full = seg_sse(1, k) + seg_sse(k + 1, n);
        if sse_full == 0.0 {
            out.push(None);
        } else {
            let f = ((sse_red - sse_full).max(0.0) / 2.0) / (sse_full / (nf - 4.0));
            out.push(Some(f));
        }
    }
    Ok(out)
}

/// Maximal two-phase `F` over the cropped admissible range, with the
/// fitted segments at the argmax.
pub fn fmax_test(x: &TimeSeries, delta: f64) -> Result<TrendShiftOutcome> {
    let n = x.n();
    if n < 6 {
        return Err(Error::InvalidSeries(format!("Fmax needs n >= 6, got {n}")));
    }
    let (lo, hi) = admissible_range(n, Some(delta), 2, n - 2)?;
    let values = f_values(x)?;
    let mut skipped = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        match values[k - 2] {
            None => skipped.push(k),
            Some(f) => {
                if best.map_or(true, |(_, b)| f > b) {
                    best = Some((k, f));
                }
            }
        }
    }
    let (tau_hat, statistic) = best.ok_or_else(|| {
        Error::DegenerateVariance("every F candidate has a zero full-model SSE".into())
    })?;
    Ok(TrendShiftOutcome {
        test: TrendShiftTest::Fmax,
        statistic,
        tau_hat,
        delta,
        fits: Some(FitRecord::TwoPhase(two_phase_fit(x, tau_hat)?)),
        skipped,
    })
}

struct JoinpointCoeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    m: f64,
    /// weight-vector building blocks: w_t = n (p + q t + r u_t) / m
    p: f64,
    q: f64,
    r: f64,
}

fn joinpoint_coeffs(n: usize, k: usize) -> JoinpointCoeffs {
    let nf = n as f64;
    let mf = (n - k) as f64;
    let kf = k as f64;
    let a = nf * (nf + 1.0) / 2.0;
    let c = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 6.0;
    let b = mf * (mf + 1.0) / 2.0;
    let e = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 6.0;
    let d = e + kf * b;
    let m = (a * b - nf * d).powi(2) - (a * a - nf * c) * (b * b - nf * e);
    JoinpointCoeffs {
        a,
        b,
        c,
        d,
        e,
        m,
        p: b * c - a * d,
        q: d * nf - a * b,
        r: a * a - c * nf,
    }
}

/// Joinpoint slope-change estimate and its exact unit-variance at a fixed
/// split. Requires `2 <= k <= n-2`.
///
/// `beta_hat` is computed from the null-fit residuals; the weight vector
/// annihilates any line, so this equals the raw-data value while staying
/// well conditioned under large intercepts or trends. The stored `v1..v3`
/// are the raw-data sums.
pub fn joinpoint_beta(x: &TimeSeries, k: usize) -> Result<JoinpointFit> {
    let n = x.n();
    if k < 2 || k + 2 > n {
        return Err(Error::IndexOutOfRange {
            start: k,
            end: k,
            n,
        });
    }
    let co = joinpoint_coeffs(n, k);
    if co.m == 0.0 {
        return Err(Error::SingularDesign(k));
    }
    let nf = n as f64;
    let fit = ols_line_fit(x)?;
    let (mut w1, mut w2, mut w3) = (0.0, 0.0, 0.0);
    let (mut v1, mut v2, mut v3) = (0.0, 0.0, 0.0);
    for (i, (res, raw)) in fit.residuals.iter().zip(x.values()).enumerate() {
        let t = (i + 1) as f64;
        w1 += res;
        w2 += t * res;
        v1 += raw;
        v2 += t * raw;
        if i + 1 > k {
            let u = t - k as f64;
            w3 += u * res;
            v3 += u * raw;
        }
    }
    let beta_hat = nf * (co.p * w1 + co.q * w2 + co.r * w3) / co.m;
    // var = sum_t w_t^2 expanded through the (1, t, u_t) cross sums
    let var_beta_exact = nf * nf
        * (co.p * co.p * nf
            + co.q * co.q * co.c
            + co.r * co.r * co.e
            + 2.0 * co.p * co.q * co.a
            + 2.0 * co.p * co.r * co.b
            + 2.0 * co.q * co.r * co.d)
        / (co.m * co.m);
    Ok(JoinpointFit {
        k,
        beta_hat,
        var_beta_exact,
        a: co.a,
        b: co.b,
        c: co.c,
        d: co.d,
        e: co.e,
        m: co.m,
        v1,
        v2,
        v3,
    })
}

/// Jointly refitted constrained model `(mu, alpha, beta)` at a fixed
/// split, solving the 3x3 normal equations of the `(1, t, (t-k)_+)` design.
pub fn joinpoint_refit(x: &TimeSeries, k: usize) -> Result<(f64, f64, f64)> {
    let n = x.n();
    if k < 2 || k + 2 > n {
        return Err(Error::IndexOutOfRange {
            start: k,
            end: k,
            n,
        });
    }
    let co = joinpoint_coeffs(n, k);
    if co.m == 0.0 {
        return Err(Error::SingularDesign(k));
    }
    let nf = n as f64;
    let det = -co.m / nf;
    let red = ols_line_fit(x)?;
    let (mut v1, mut v2, mut v3) = (0.0, 0.0, 0.0);
    for (i, res) in red.residuals.iter().enumerate() {
        let t = (i + 1) as f64;
        v1 += res;
        v2 += t * res;
        if i + 1 > k {
            v3 += (t - k as f64) * res;
        }
    }
    let (a, b, c, d, e) = (co.a, co.b, co.c, co.d, co.e);
    let mu_r = ((c * e - d * d) * v1 + (b * d - a * e) * v2 + (a * d - b * c) * v3) / det;
    let alpha_r = ((b * d - a * e) * v1 + (nf * e - b * b) * v2 + (a * b - nf * d) * v3) / det;
    let beta = ((a * d - b * c) * v1 + (a * b - nf * d) * v2 + (nf * c - a * a) * v3) / det;
    Ok((mu_r + red.mu_hat, alpha_r + red.alpha_hat, beta))
}

/// Studentized joinpoint values `J_k = beta_hat_k / sqrt(sigma2_eps *
/// var_beta_exact(k))` for `k = 2..n-2` (index `i` holds `k = i + 2`),
/// with the null-fit residual variance plugged in.
pub fn j_values(x: &TimeSeries) -> Result<Vec<f64>> {
    let fit = nondegenerate_fit(x)?;
    let sigma2 = fit.sigma_eps_hat * fit.sigma_eps_hat;
    let n = x.n();
    let nf = n as f64;

    // prefix sums of the residuals give each V3(k) in O(1)
    let mut cum_r = vec![0.0; n + 1];
    let mut cum_tr = vec![0.0; n + 1];
    for (i, v) in fit.residuals.iter().enumerate() {
        cum_r[i + 1] = cum_r[i] + v;
        cum_tr[i + 1] = cum_tr[i] + (i + 1) as f64 * v;
    }
    let (w1, w2) = (cum_r[n], cum_tr[n]);

    let mut out = Vec::with_capacity(n - 3);
    for k in 2..=n - 2 {
        let co = joinpoint_coeffs(n, k);
        if co.m == 0.0 {
            return Err(Error::SingularDesign(k));
        }
        let w3 = (cum_tr[n] - cum_tr[k]) - k as f64 * (cum_r[n] - cum_r[k]);
        let beta = nf * (co.p * w1 + co.q * w2 + co.r * w3) / co.m;
        let var = nf * nf
            * (co.p * co.p * nf
                + co.q * co.q * co.c
                + co.r * co.r * co.e
                + 2.0 * co.p * co.q * co.a
                + 2.0 * co.p * co.r * co.b
                + 2.0 * co.q * co.r * co.d)
            / (co.m * co.m);
        out.push(beta / (sigma2 * var).sqrt());
    }
    Ok(out)
}

/// Cropped maximum of `|J_k|`, with the joinpoint fit and jointly
/// refitted coefficients at the argmax.
pub fn jmax_test(x: &TimeSeries, delta: f64) -> Result<TrendShiftOutcome> {
    let n = x.n();
    if n < 6 {
        return Err(Error::InvalidSeries(format!("Jmax needs n >= 6, got {n}")));
    }
    let (lo, hi) = admissible_range(n, Some(delta), 2, n - 2)?;
    let j = j_values(x)?;
    let (tau_hat, statistic) = argmax_abs((lo..=hi).map(|k| (k, j[k - 2]))).expect("nonempty");
    let fit = joinpoint_beta(x, tau_hat)?;
    let (mu, alpha, beta) = joinpoint_refit(x, tau_hat)?;
    Ok(TrendShiftOutcome {
        test: TrendShiftTest::Jmax,
        statistic: statistic.abs(),
        tau_hat,
        delta,
        fits: Some(FitRecord::Joinpoint {
            fit,
            mu,
            alpha,
            beta,
        }),
        skipped: Vec::new(),
    })
}

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
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    fn noise(n: usize, amp: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| amp * (rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn var_mu_diff_values() {
        assert!((var_mu_diff(4, 2) - 0.2).abs() < 1e-15);
        assert!((var_mu_diff(4, 1) - (1.0 / 3.0 + 1.0 - 0.8)).abs() < 1e-15);
        for n in [5usize, 17, 120] {
            for k in 1..n {
                let diff = var_mu_diff(n, k) - var_mu_diff(n, n - k);
                assert!(diff.abs() < 1e-14, "symmetry at n={n}, k={k}");
            }
        }
    }

    #[test]
    fn cov_dkdl_values() {
        assert_eq!(cov_dkdl(10, 4, 4), 1.0);
        let got = cov_dkdl(4, 1, 2);
        assert!((got - (-1.0 / 6.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn dmax_degenerate_and_level_shift() {
        let line: Vec<f64> = (1..=12).map(|t| 3.0 + 0.5 * t as f64).collect();
        assert!(matches!(
            dmax_test(&ts(&line), 0.05),
            Err(Error::DegenerateVariance(_))
        ));

        // level shift on a common slope, tiny seeded noise keeps sigma positive
        let n = 20;
        let z = noise(n, 1e-3, 7);
        let x: Vec<f64> = (1..=n)
            .map(|t| 0.5 * t as f64 + if t > 10 { 2.0 } else { 0.0 } + z[t - 1])
            .collect();
        let out = dmax_test(&ts(&x), 0.05).unwrap();
        assert_eq!(out.tau_hat, 10);

        // any added line leaves the statistic unchanged
        let shifted: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + 5.0 - 0.3 * (i + 1) as f64)
            .collect();
        let out2 = dmax_test(&ts(&shifted), 0.05).unwrap();
        assert!((out.statistic - out2.statistic).abs() < 1e-10);
        assert_eq!(out.tau_hat, out2.tau_hat);
    }

    #[test]
    fn hmax_hand_example() {
        let x = ts(&[1.0, 0.0, 1.0, 0.0]);
        let out = hmax_test(&x).unwrap();
        assert!((out.statistic - 0.4 / (0.4f64.sqrt() * 2.0)).abs() < 1e-12);
        assert_eq!(out.tau_hat, 2);

        let line: Vec<f64> = (1..=9).map(|t| -2.0 + 0.25 * t as f64).collect();
        assert!(matches!(
            hmax_test(&ts(&line)),
            Err(Error::DegenerateVariance(_))
        ));

        let z = noise(24, 1.0, 3);
        let a = ts(&z);
        let shifted: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, v)| v + 4.0 + 0.7 * (i + 1) as f64)
            .collect();
        let b = ts(&shifted);
        let oa = hmax_test(&a).unwrap();
        let ob = hmax_test(&b).unwrap();
        assert!((oa.statistic - ob.statistic).abs() < 1e-10);
    }

    #[test]
    fn two_phase_exact_line() {
        let x: Vec<f64> = (1..=15).map(|t| 1.5 - 0.2 * t as f64).collect();
        let fit = two_phase_fit(&ts(&x), 7).unwrap();
        assert!(fit.sse_full < 1e-20);
        assert!(fit.sse_red < 1e-20);
        assert!((fit.alpha1 - (-0.2)).abs() < 1e-10);
        assert!((fit.alpha2 - (-0.2)).abs() < 1e-10);
        assert!((fit.mu1 - 1.5).abs() < 1e-9);
        assert!((fit.mu2 - 1.5).abs() < 1e-9);
        assert!(matches!(
            two_phase_fit(&ts(&x), 1),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            two_phase_fit(&ts(&x), 14),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn fmax_recovers_two_line_break() {
        let n = 30;
        let z = noise(n, 1e-3, 11);
        let x: Vec<f64> = (1..=n)
            .map(|t| {
                let base = if t <= 18 {
                    1.0 + 0.1 * t as f64
                } else {
                    1.0 + 0.1 * 18.0 + 0.6 * (t as f64 - 18.0)
                };
                base + z[t - 1]
            })
            .collect();
        let out = fmax_test(&ts(&x), 0.05).unwrap();
        assert_eq!(out.tau_hat, 18);
        // nesting holds at the argmax
        match out.fits.unwrap() {
            FitRecord::TwoPhase(f) => assert!(f.sse_red >= f.sse_full),
            _ => panic!("expected two-phase fit"),
        }
    }

    #[test]
    fn fmax_matches_direct_nested_f() {
        // single line plus noise: every F_k must match the textbook nested
        // computation from two_phase_fit
        let n = 20;
        let z = noise(n, 1.0, 5);
        let x: Vec<f64> = (1..=n).map(|t| 0.3 * t as f64 + z[t - 1]).collect();
        let series = ts(&x);
        let values = f_values(&series).unwrap();
        for k in 2..=n - 2 {
            let f = two_phase_fit(&series, k).unwrap();
            let direct = ((f.sse_red - f.sse_full) / 2.0) / (f.sse_full / (n as f64 - 4.0));
            let got = values[k - 2].unwrap();
            assert!(
                (got - direct).abs() <= 1e-8 * direct.abs().max(1.0),
                "k={k}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn joinpoint_exact_line_and_bounds() {
        let x: Vec<f64> = (1..=20).map(|t| 4.0 + 0.7 * t as f64).collect();
        let series = ts(&x);
        for k in 2..=18 {
            let fit = joinpoint_beta(&series, k).unwrap();
            assert!(fit.beta_hat.abs() < 1e-10);
        }
        assert!(matches!(
            joinpoint_beta(&series, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            joinpoint_beta(&series, 19),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn joinpoint_coefficient_closed_forms() {
        let fit = joinpoint_beta(&ts(&noise(25, 1.0, 9)), 10).unwrap();
        let n = 25.0;
        assert_eq!(fit.a, n * (n + 1.0) / 2.0);
        assert_eq!(fit.c, n * (n + 1.0) * (2.0 * n + 1.0) / 6.0);
        // brute-force sums
        let (mut b, mut d, mut e) = (0.0, 0.0, 0.0);
        for t in 11..=25u32 {
            let u = (t - 10) as f64;
            b += u;
            d += u * t as f64;
            e += u * u;
        }
        assert_eq!(fit.b, b);
        assert_eq!(fit.d, d);
        assert_eq!(fit.e, e);
    }

    #[test]
    fn joinpoint_variance_asymptote() {
        // n^3 * var at k = n/2 approaches 3 / (t^3 (1-t)^3) = 192 at t = 1/2
        let n = 2000;
        let x = ts(&noise(n, 1.0, 1));
        let fit = joinpoint_beta(&x, n / 2).unwrap();
        let scaled = fit.var_beta_exact * (n as f64).powi(3);
        assert!(
            (scaled - 192.0).abs() / 192.0 < 0.05,
            "n^3 var = {scaled}, expected near 192"
        );
    }

    #[test]
    fn jmax_recovers_slope_change() {
        let n = 60;
        let z = noise(n, 1e-3, 13);
        let kstar = 35;
        let x: Vec<f64> = (1..=n)
            .map(|t| {
                let ramp = if t > kstar { (t - kstar) as f64 * 0.4 } else { 0.0 };
                0.05 * t as f64 + ramp + z[t - 1]
            })
            .collect();
        let out = jmax_test(&ts(&x), 0.05).unwrap();
        assert_eq!(out.tau_hat, kstar);
        match out.fits.unwrap() {
            FitRecord::Joinpoint { fit, alpha, beta, .. } => {
                assert!((fit.beta_hat - beta).abs() < 1e-8 * beta.abs().max(1.0));
                assert!((alpha - 0.05).abs() < 1e-3);
                assert!((beta - 0.4).abs() < 1e-3);
            }
            _ => panic!("expected joinpoint fit"),
        }

        let line: Vec<f64> = (1..=30).map(|t| 0.9 * t as f64).collect();
        assert!(matches!(
            jmax_test(&ts(&line), 0.05),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn jmax_line_invariance() {
        let n = 40;
        let z = noise(n, 1.0, 17);
        let x = ts(&z);
        let shifted: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, v)| 2.5 * v + 3.0 - 0.8 * (i + 1) as f64)
            .collect();
        let y = ts(&shifted);
        let (a, b) = (jmax_test(&x, 0.05).unwrap(), jmax_test(&y, 0.05).unwrap());
        assert_eq!(a.tau_hat, b.tau_hat);
        assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.max(1.0));
        let (fa, fb) = (fmax_test(&x, 0.05).unwrap(), fmax_test(&y, 0.05).unwrap());
        assert_eq!(fa.tau_hat, fb.tau_hat);
        assert!((fa.statistic - fb.statistic).abs() < 1e-9 * fa.statistic.max(1.0));
    }
}
