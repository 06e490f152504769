//! Monte Carlo validation of the `DSup` sampling construction.
//!
//! The `Dmax` limit covariance shares its numerator with the residual-CUSUM
//! limit covariance, so the engine samples the `Dmax` process by pointwise
//! standardization of the cheap bridge-driven `H` process. This module
//! confirms that identity empirically and cross-checks against direct
//! Cholesky sampling of the target covariance, plus a transcription check
//! of the joinpoint covariance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::functional::{cholesky_lower, d_cov, fill_bridge, h_var, j_cov};
use super::SimConfig;
use crate::error::{Error, Result};

/// One empirical-vs-formula covariance comparison.
#[derive(Debug, Clone)]
pub struct CovCheck {
    pub t: f64,
    pub s: f64,
    pub expected: f64,
    pub observed: f64,
    pub se: f64,
    pub route: &'static str,
}

impl CovCheck {
    pub fn passed(&self) -> bool {
        (self.observed - self.expected).abs() <= 3.0 * self.se
    }
}

/// Validation report: every check ran and sat within 3 standard errors.
#[derive(Debug, Clone)]
pub struct DsupValidation {
    pub checks: Vec<CovCheck>,
}

const PAIRS: [(f64, f64); 4] = [(0.25, 0.5), (0.1, 0.4), (0.5, 0.75), (0.3, 0.3)];

fn mean_and_se(products: &[f64]) -> (f64, f64) {
    let n = products.len() as f64;
    let mean = products.iter().sum::<f64>() / n;
    let var = products.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
    (mean, (var / n).sqrt())
}

/// Confirm that the normalized-H construction reproduces the `Dmax` limit
/// covariance, cross-check with direct Cholesky sampling, and verify the
/// joinpoint covariance transcription at one pair. Errors with the first
/// offending `(t, s)` pair.
pub fn validate_dsup_construction(config: &SimConfig) -> Result<DsupValidation> {
    config.validate()?;
    let m = config.grid;
    let reps = config.replications;
    let mut checks = Vec::new();

    // route 1: normalized-H values read off simulated bridge paths
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xD5);
        let idx: Vec<(usize, usize)> = PAIRS
            .iter()
            .map(|(t, s)| {
                (
                    ((t * m as f64).round() as usize).clamp(1, m) - 1,
                    ((s * m as f64).round() as usize).clamp(1, m) - 1,
                )
            })
            .collect();
        let mut products: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); PAIRS.len()];
        let mut buf = Vec::with_capacity(m);
        for _ in 0..reps {
            fill_bridge(m, &mut rng, &mut buf);
            let int_b = buf.iter().sum::<f64>() / m as f64;
            for (p, &(i, j)) in idx.iter().enumerate() {
                let g = |i: usize| {
                    let t = (i + 1) as f64 / m as f64;
                    (buf[i] - 6.0 * t * (1.0 - t) * int_b) / h_var(t).sqrt()
                };
                products[p].push(g(i) * g(j));
            }
        }
        for (p, &(i, j)) in idx.iter().enumerate() {
            let (ti, tj) = ((i + 1) as f64 / m as f64, (j + 1) as f64 / m as f64);
            let (observed, se) = mean_and_se(&products[p]);
            checks.push(CovCheck {
                t: ti,
                s: tj,
                expected: d_cov(ti.min(tj), ti.max(tj)),
                observed,
                se,
                route: "normalized-h",
            });
        }
    }

    // route 2: direct Cholesky sampling of the target covariance on the
    // pair grid
    {
        let mut ts: Vec<f64> = PAIRS.iter().flat_map(|&(t, s)| [t, s]).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let n = ts.len();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                cov[i * n + j] = d_cov(ts[j], ts[i]);
            }
        }
        let chol = cholesky_lower(&cov, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xC4);
        let pos = |t: f64| ts.iter().position(|v| *v == t).unwrap();
        let mut products: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); PAIRS.len()];
        let mut sample = vec![0.0; n];
        for _ in 0..reps {
            draw_correlated(&chol, n, &mut rng, &mut sample);
            for (p, &(t, s)) in PAIRS.iter().enumerate() {
                products[p].push(sample[pos(t)] * sample[pos(s)]);
            }
        }
        for (p, &(t, s)) in PAIRS.iter().enumerate() {
            let (observed, se) = mean_and_se(&products[p]);
            checks.push(CovCheck {
                t,
                s,
                expected: d_cov(t.min(s), t.max(s)),
                observed,
                se,
                route: "cholesky",
            });
        }
    }

    // joinpoint covariance transcription at (0.25, 0.5)
    {
        let (t, s) = (0.25, 0.5);
        let cov = vec![1.0, j_cov(t, s), j_cov(t, s), 1.0];
        let chol = cholesky_lower(&cov, 2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x15);
        let mut products = Vec::with_capacity(reps);
        let mut sample = vec![0.0; 2];
        for _ in 0..reps {
            draw_correlated(&chol, 2, &mut rng, &mut sample);
            products.push(sample[0] * sample[1]);
        }
        let (observed, se) = mean_and_se(&products);
        checks.push(CovCheck {
            t,
            s,
            expected: j_cov(t, s),
            observed,
            se,
            route: "jsup-cholesky",
        });
    }

    if let Some(bad) = checks.iter().find(|c| !c.passed()) {
        return Err(Error::ValidationFailure {
            t: bad.t,
            s: bad.s,
            message: format!(
                "{}: observed {:.5} vs expected {:.5} (se {:.5})",
                bad.route, bad.observed, bad.expected, bad.se
            ),
        });
    }
    Ok(DsupValidation { checks })
}

fn draw_correlated(chol: &[f64], n: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    use rand_distr::{Distribution, StandardNormal};
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mut row = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, zj) in z[..=i].iter().enumerate() {
            acc += chol[row + j] * zj;
        }
        row += i + 1;
        *o = acc;
    }
}
