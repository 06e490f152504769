//! Monte Carlo simulation of the asymptotic null distributions.
//!
//! Every test statistic in this crate converges to a functional of a
//! Gaussian limit process: suprema of (weighted) Brownian bridges, the
//! integrated squared bridge, suprema of bridge-derived processes and a
//! quadratic-form supremum driven by Brownian motion. This module samples
//! discretized paths on a uniform grid of (0, 1), evaluates the
//! functionals and estimates empirical quantiles.
//!
//! Replicates are partitioned into fixed-size blocks; block `b` draws from
//! an independent ChaCha8 stream derived from `(seed, family kind, b)`, so
//! results are bit-identical for any worker count. For the sup-of-path
//! families (`BridgeSup`, `HSup`, `DSup`) the quantile estimator refines
//! each grid segment with the exact conditional Brownian-bridge maximum,
//! which removes the O(m^-1/2) deficiency of a plain grid maximum;
//! [`eval_functional`](functional::eval_functional) remains the plain grid
//! evaluation.

pub mod analytic;
pub mod cache;
pub mod functional;
pub mod validate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use analytic::{kolmogorov_sup_quantile, kolmogorov_tail};
pub use functional::eval_functional;
pub use validate::{validate_dsup_construction, CovCheck, DsupValidation};

/// Quantile levels reported by [`estimate_quantiles`].
pub const DEFAULT_PROBS: [f64; 5] = [0.90, 0.95, 0.975, 0.99, 0.999];

const BLOCK_SIZE: usize = 2048;

/// The limit-process functional family a quantile table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `sup |B(t)|` — limit of the studentized CUSUM maximum.
    BridgeSup,
    /// `sup |B(t)| / sqrt(t(1-t))` over the cropped interval — limit of `Zmax`.
    WeightedBridgeSup,
    /// `int B^2(t) dt` — limit of SCUSUM.
    BridgeL2,
    /// `sup |G(t)|` with `G = B - 6t(1-t) int B` — limit of `Hmax`.
    HSup,
    /// `sup |G(t)| / sqrt(t(1-t)(1-3t(1-t)))` cropped — limit of `Dmax`.
    DSup,
    /// `sup (1/2) Lambda' Omega^{-1} Lambda` cropped, driven by Brownian
    /// motion — limit of `Fmax`.
    FSup,
    /// `sup |G(t)|` of the joinpoint limit process, sampled by Cholesky
    /// factorization of its covariance on a cropped grid — limit of `Jmax`.
    JSup,
}

impl FamilyKind {
    pub fn requires_delta(&self) -> bool {
        matches!(
            self,
            FamilyKind::WeightedBridgeSup | FamilyKind::DSup | FamilyKind::FSup | FamilyKind::JSup
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::BridgeSup => "bridge_sup",
            FamilyKind::WeightedBridgeSup => "weighted_bridge_sup",
            FamilyKind::BridgeL2 => "bridge_l2",
            FamilyKind::HSup => "h_sup",
            FamilyKind::DSup => "d_sup",
            FamilyKind::FSup => "f_sup",
            FamilyKind::JSup => "j_sup",
        }
    }
}

/// A functional family plus its cropping fraction (0 when not cropped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFamily {
    pub kind: FamilyKind,
    pub delta: f64,
}

impl LimitFamily {
    pub fn new(kind: FamilyKind, delta: f64) -> Result<Self> {
        if kind.requires_delta() {
            crate::crop::validate_delta(delta)?;
        } else if delta != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{} takes no cropping fraction, got {delta}",
                kind.name()
            )));
        }
        Ok(Self { kind, delta })
    }

    /// Seed offset so different family kinds consume different streams.
    /// Deliberately independent of `delta`: cropped variants of one kind
    /// reuse the same paths, which makes quantile monotonicity in delta
    /// exact rather than statistical.
    fn seed_tag(&self) -> u64 {
        (self.kind as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// Simulation settings. `workers = 0` uses the global thread pool; any
/// other value runs on a dedicated pool of that size. The estimated
/// quantiles do not depend on `workers`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: usize,
    pub grid: usize,
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1000 {
            return Err(Error::InvalidConfig(format!(
                "need at least 1000 replications for quantile output, got {}",
                self.replications
            )));
        }
        if self.grid < 500 {
            return Err(Error::InvalidConfig(format!(
                "need a grid of at least 500 points, got {}",
                self.grid
            )));
        }
        Ok(())
    }
}

/// A discretized sample path on the uniform grid `t_i = i/m`, `i = 1..m`
/// (for `JSup`, on its cropped grid instead).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub m: usize,
    pub values: Vec<f64>,
}

/// Empirical quantiles of a limit-process functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub family: LimitFamily,
    pub probs: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub config: SimConfig,
}

impl QuantileTable {
    /// Quantile for an exact probability level, if present.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.probs
            .iter()
            .position(|q| (q - p).abs() < 1e-12)
            .map(|i| self.quantiles[i])
    }
}

/// Sample a standard Brownian motion on `t_i = i/m`: scaled cumulative
/// sums of independent normals with increment variance `1/m`.
pub fn sample_motion(m: usize, rng: &mut ChaCha8Rng) -> GridPath {
    let mut values = Vec::with_capacity(m);
    functional::fill_motion(m, rng, &mut values);
    GridPath { m, values }
}

/// Sample a standard Brownian bridge `B_i = W_i - (i/m) W_m`; the final
/// value is exactly zero by construction.
pub fn sample_bridge(m: usize, rng: &mut ChaCha8Rng) -> GridPath {
    let mut values = Vec::with_capacity(m);
    functional::fill_bridge(m, rng, &mut values);
    GridPath { m, values }
}

/// Order statistic at index `ceil(p * r)` (1-based) of the sorted sample.
fn quantile_index(p: f64, r: usize) -> usize {
    let x = p * r as f64;
    let rounded = x.round();
    let idx = if (x - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        x.ceil() as usize
    };
    idx.clamp(1, r) - 1
}

/// One functional draw per replicate for `family`, in deterministic block
/// order.
pub(crate) fn simulate_functional_values(
    family: &LimitFamily,
    config: &SimConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let jsup = match family.kind {
        FamilyKind::JSup => Some(functional::JsupSampler::build(family.delta, config.grid)?),
        _ => None,
    };
    let r = config.replications;
    let blocks = r.div_ceil(BLOCK_SIZE);
    let seed = config.seed ^ family.seed_tag();
    let family = *family;
    let m = config.grid;

    let run = || -> Result<Vec<Vec<f64>>> {
        (0..blocks)
            .into_par_iter()
            .map(|b| -> Result<Vec<f64>> {
                let count = BLOCK_SIZE.min(r - b * BLOCK_SIZE);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let mut out = Vec::with_capacity(count);
                let mut scratch = functional::Scratch::new(m);
                for _ in 0..count {
                    let v = match &jsup {
                        Some(sampler) => sampler.replicate(&mut rng, &mut scratch),
                        None => functional::path_replicate(&family, m, &mut rng, &mut scratch)?,
                    };
                    out.push(v);
                }
                Ok(out)
            })
            .collect()
    };

    let nested = if config.workers == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(run)?
    };
    let mut values: Vec<f64> = nested.concat();
    values.truncate(r);
    Ok(values)
}

/// Estimate the [`DEFAULT_PROBS`] quantiles of a limit functional.
///
/// Deterministic for a given `(family, config)` including the worker
/// count; see the module docs for the block scheme.
pub fn estimate_quantiles(family: &LimitFamily, config: &SimConfig) -> Result<QuantileTable> {
    let mut values = simulate_functional_values(family, config)?;
    values.sort_unstable_by(f64::total_cmp);
    let quantiles = DEFAULT_PROBS
        .iter()
        .map(|&p| values[quantile_index(p, values.len())])
        .collect();
    Ok(QuantileTable {
        family: *family,
        probs: DEFAULT_PROBS.to_vec(),
        quantiles,
        config: *config,
    })
}
