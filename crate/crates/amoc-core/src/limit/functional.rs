//! Limit-process covariances, functional evaluation on grid paths, and the
//! per-replicate samplers used by the quantile engine.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FamilyKind, GridPath, LimitFamily};
use crate::error::{Error, Result};

/// Brownian bridge covariance `t(1-s)` for `t <= s`.
pub fn bridge_cov(t: f64, s: f64) -> f64 {
    t * (1.0 - s)
}

/// Covariance of the residual-CUSUM limit `G = B - 6t(1-t) int B`:
/// `t(1-s)[1 - 3s(1-t)]` for `t <= s`.
pub fn h_cov(t: f64, s: f64) -> f64 {
    t * (1.0 - s) * (1.0 - 3.0 * s * (1.0 - t))
}

/// Pointwise variance of the residual-CUSUM limit.
pub fn h_var(t: f64) -> f64 {
    t * (1.0 - t) * (1.0 - 3.0 * t * (1.0 - t))
}

/// Correlation of the `Dmax` limit process for `t <= s`: the `h_cov`
/// numerator standardized by the pointwise standard deviations.
pub fn d_cov(t: f64, s: f64) -> f64 {
    if t == s {
        return 1.0;
    }
    (t * (1.0 - s) - 3.0 * t * (1.0 - t) * s * (1.0 - s)) / (h_var(t) * h_var(s)).sqrt()
}

/// Covariance of the joinpoint limit process for `t <= s`:
/// `(3s/2 - t/2 - st)/(s(1-t)) * sqrt(t(1-s)/(s(1-t)))`.
pub fn j_cov(t: f64, s: f64) -> f64 {
    (1.5 * s - 0.5 * t - s * t) / (s * (1.0 - t)) * (t * (1.0 - s) / (s * (1.0 - t))).sqrt()
}

/// The 2x2 matrix `Omega(t)` of the two-phase regression limit, as
/// `(o11, o12, o22)`.
pub fn omega(t: f64) -> (f64, f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5, t6) = (t2 * t2, t2 * t3, t3 * t3);
    (
        t - 4.0 * t2 + 6.0 * t3 - 3.0 * t4,
        t2 / 2.0 - 2.0 * t3 + 3.5 * t4 - 2.0 * t5,
        t3 / 3.0 - t4 + 2.0 * t5 - 4.0 * t6 / 3.0,
    )
}

/// `Lambda(t)` of the two-phase regression limit, from `kappa1(t) = W(t)`,
/// `kappa2(t) = t W(t) - int_0^t W` and their values at 1.
pub fn lambda(t: f64, k1_t: f64, k2_t: f64, k1_1: f64, k2_1: f64) -> (f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    (
        k1_t - k1_1 * (4.0 * t - 3.0 * t2) - k2_1 * (6.0 * t2 - 6.0 * t),
        k2_t - k1_1 * (2.0 * t2 - 2.0 * t3) - k2_1 * (4.0 * t3 - 3.0 * t2),
    )
}

/// `(1/2) Lambda' Omega^{-1} Lambda` with a closed-form 2x2 solve and a
/// condition-number guard of 1e12.
pub fn f_quad(t: f64, l1: f64, l2: f64) -> Result<f64> {
    let (o11, o12, o22) = omega(t);
    let det = o11 * o22 - o12 * o12;
    let trace = o11 + o22;
    if !(det > 0.0) || trace * trace / det > 1e12 {
        return Err(Error::NumericalSingularity(format!(
            "Omega(t) not invertible at t = {t}"
        )));
    }
    Ok(0.5 * (o22 * l1 * l1 - 2.0 * o12 * l1 * l2 + o11 * l2 * l2) / det)
}

/// Grid indices (0-based into `values`) with `t_i` in the cropped
/// interval: the open `(delta, 1-delta)` for the weighted suprema, whose
/// limit laws are stated on the open interval, and the closed
/// `[delta, 1-delta]` for the F quadratic form.
fn crop_indices(m: usize, delta: f64, open: bool) -> (usize, usize) {
    let mf = m as f64;
    let (mut lo, mut hi) = (
        ((delta * mf).ceil() as usize).max(1),
        (((1.0 - delta) * mf).floor() as usize).min(m - 1),
    );
    if open {
        if (lo as f64) <= delta * mf {
            lo += 1;
        }
        if (hi as f64) >= (1.0 - delta) * mf {
            hi -= 1;
        }
    }
    (lo - 1, hi - 1)
}

/// Plain evaluation of a limit functional on a discretized path.
///
/// The path kind must match the family: a Brownian bridge for the
/// bridge-derived families, Brownian motion for `FSup`, and an
/// already-sampled joinpoint process (on its cropped grid) for `JSup`.
/// Suprema and integrals are taken over the grid points; the quantile
/// engine additionally refines sup-type families between grid points.
pub fn eval_functional(family: &LimitFamily, path: &GridPath) -> Result<f64> {
    eval_on_values(family, path.m, &path.values)
}

fn eval_on_values(family: &LimitFamily, m: usize, v: &[f64]) -> Result<f64> {
    let mf = m as f64;
    match family.kind {
        FamilyKind::BridgeSup | FamilyKind::JSup => {
            Ok(v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        }
        FamilyKind::WeightedBridgeSup => {
            let (lo, hi) = crop_indices(m, family.delta, true);
            let mut best = 0.0f64;
            for i in lo..=hi {
                let t = (i + 1) as f64 / mf;
                best = best.max(v[i].abs() / (t * (1.0 - t)).sqrt());
            }
            Ok(best)
        }
        FamilyKind::BridgeL2 => Ok(v.iter().map(|x| x * x).sum::<f64>() / mf),
        FamilyKind::HSup | FamilyKind::DSup => {
            let int_b = v.iter().sum::<f64>() / mf;
            let cropped = family.kind == FamilyKind::DSup;
            let (lo, hi) = if cropped {
                crop_indices(m, family.delta, true)
            } else {
                (0, m - 1)
            };
            let mut best = 0.0f64;
            for i in lo..=hi {
                let t = (i + 1) as f64 / mf;
                let g = v[i] - 6.0 * t * (1.0 - t) * int_b;
                let w = if cropped { h_var(t).sqrt() } else { 1.0 };
                best = best.max(g.abs() / w);
            }
            Ok(best)
        }
        FamilyKind::FSup => {
            let mut int_w = Vec::with_capacity(m);
            f_sup_eval(family.delta, m, v, &mut int_w)
        }
    }
}

/// `FSup` evaluation with a caller-provided buffer for the cumulative
/// trapezoidal integral of the motion path.
fn f_sup_eval(delta: f64, m: usize, w: &[f64], int_buf: &mut Vec<f64>) -> Result<f64> {
    let mf = m as f64;
    let dt = 1.0 / mf;
    int_buf.clear();
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &wi in w {
        acc += 0.5 * (prev + wi) * dt;
        prev = wi;
        int_buf.push(acc);
    }
    let k1_1 = w[m - 1];
    let k2_1 = 1.0 * w[m - 1] - int_buf[m - 1];
    let (lo, hi) = crop_indices(m, delta, false);
    let mut best = 0.0f64;
    for i in lo..=hi {
        let t = (i + 1) as f64 / mf;
        let k2_t = t * w[i] - int_buf[i];
        let (l1, l2) = lambda(t, w[i], k2_t, k1_1, k2_1);
        best = best.max(f_quad(t, l1, l2)?);
    }
    Ok(best)
}

/// Reusable per-thread buffers for path generation.
pub(crate) struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(m: usize) -> Self {
        Self {
            a: Vec::with_capacity(m),
            b: Vec::with_capacity(m),
        }
    }
}

/// Fill `buf` with a standard Brownian motion on `t_i = i/m`: scaled
/// cumulative sums of independent normals with increment variance `1/m`.
pub(crate) fn fill_motion(m: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) {
    let sd = (1.0 / m as f64).sqrt();
    buf.clear();
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = StandardNormal.sample(rng);
        acc += sd * z;
        buf.push(acc);
    }
}

/// Fill `buf` with a standard Brownian bridge `B_i = W_i - (i/m) W_m`;
/// the final value is exactly zero.
pub(crate) fn fill_bridge(m: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) {
    fill_motion(m, rng, buf);
    let w_final = buf[m - 1];
    let mf = m as f64;
    for (i, v) in buf.iter_mut().enumerate() {
        *v -= (i + 1) as f64 / mf * w_final;
    }
}

/// Exact conditional supremum of `|path|` on one grid segment, given
/// endpoint values `a`, `b` and segment variance `dt`: the running
/// maximum and minimum of a Brownian bridge are sampled by inverting
/// `P(M >= y) = exp(-2 (y-a)(y-b)/dt)`.
fn segment_abs_sup(a: f64, b: f64, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let w: f64 = rng.random();
    let gap_sq = (a - b) * (a - b);
    let seg_max = 0.5 * (a + b + (gap_sq - 2.0 * dt * u.ln()).sqrt());
    let seg_min = 0.5 * (a + b - (gap_sq - 2.0 * dt * w.ln()).sqrt());
    seg_max.max(-seg_min)
}

/// One functional draw for a path-driven family (everything but `JSup`).
pub(crate) fn path_replicate(
    family: &LimitFamily,
    m: usize,
    rng: &mut ChaCha8Rng,
    scratch: &mut Scratch,
) -> Result<f64> {
    let mf = m as f64;
    let dt = 1.0 / mf;
    match family.kind {
        FamilyKind::FSup => {
            fill_motion(m, rng, &mut scratch.a);
            f_sup_eval(family.delta, m, &scratch.a, &mut scratch.b)
        }
        FamilyKind::WeightedBridgeSup | FamilyKind::BridgeL2 => {
            fill_bridge(m, rng, &mut scratch.a);
            eval_on_values(family, m, &scratch.a)
        }
        FamilyKind::BridgeSup => {
            fill_bridge(m, rng, &mut scratch.a);
            let mut best = 0.0f64;
            let mut prev = 0.0;
            for &v in scratch.a.iter() {
                best = best.max(segment_abs_sup(prev, v, dt, rng));
                prev = v;
            }
            Ok(best)
        }
        FamilyKind::HSup | FamilyKind::DSup => {
            fill_bridge(m, rng, &mut scratch.a);
            let int_b = scratch.a.iter().sum::<f64>() / mf;
            scratch.b.clear();
            scratch.b.extend(scratch.a.iter().enumerate().map(|(i, v)| {
                let t = (i + 1) as f64 / mf;
                v - 6.0 * t * (1.0 - t) * int_b
            }));
            let g = &scratch.b;
            let cropped = family.kind == FamilyKind::DSup;
            let (lo, hi) = if cropped {
                crop_indices(m, family.delta, true)
            } else {
                (0, m - 1)
            };
            let mut best = 0.0f64;
            for i in lo..=hi {
                // refine the segment ending at grid point i; at the left
                // crop boundary only the grid value itself is admissible
                let right = g[i];
                let left_in_range = i > lo || lo == 0;
                let seg = if left_in_range {
                    let left = if i == 0 { 0.0 } else { g[i - 1] };
                    segment_abs_sup(left, right, dt, rng)
                } else {
                    right.abs()
                };
                if cropped {
                    let t = (i + 1) as f64 / mf;
                    let w_mid = h_var(t - 0.5 * dt).sqrt();
                    let point = right.abs() / h_var(t).sqrt();
                    best = best.max(seg / w_mid).max(point);
                } else {
                    best = best.max(seg);
                }
            }
            Ok(best)
        }
        FamilyKind::JSup => unreachable!("JSup uses the Cholesky sampler"),
    }
}

/// Samples the joinpoint limit process on a cropped grid through one
/// up-front Cholesky factorization of its covariance, reused across
/// replicates.
pub(crate) struct JsupSampler {
    grid: Vec<f64>,
    /// packed lower-triangular factor, row-major
    chol: Vec<f64>,
}

impl JsupSampler {
    pub(crate) fn build(delta: f64, points: usize) -> Result<Self> {
        let grid: Vec<f64> = (1..=points)
            .map(|j| delta + j as f64 * (1.0 - 2.0 * delta) / (points as f64 + 1.0))
            .collect();
        let mut cov = vec![0.0; points * points];
        for i in 0..points {
            for j in 0..=i {
                cov[i * points + j] = j_cov(grid[j], grid[i]);
            }
        }
        let chol = cholesky_lower(&cov, points)?;
        Ok(Self { grid, chol })
    }

    fn transform_max_abs(&self, z: &[f64]) -> f64 {
        let mut best = 0.0f64;
        let mut row = 0usize;
        for i in 0..z.len() {
            let mut acc = 0.0;
            for (j, zj) in z[..=i].iter().enumerate() {
                acc += self.chol[row + j] * zj;
            }
            row += i + 1;
            best = best.max(acc.abs());
        }
        best
    }

    pub(crate) fn replicate(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) -> f64 {
        let n = self.grid.len();
        scratch.a.clear();
        scratch
            .a
            .extend((0..n).map(|_| -> f64 { StandardNormal.sample(rng) }));
        self.transform_max_abs(&scratch.a)
    }

    /// Sample one full path (used by round-trip tests).
    #[cfg(test)]
    pub(crate) fn sample_path(&self, rng: &mut ChaCha8Rng) -> GridPath {
        let n = self.grid.len();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let mut values = vec![0.0; n];
        let mut row = 0usize;
        for (i, out) in values.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, zj) in z[..=i].iter().enumerate() {
                acc += self.chol[row + j] * zj;
            }
            row += i + 1;
            *out = acc;
        }
        GridPath { m: n, values }
    }
}

/// Dense Cholesky of a symmetric positive-definite matrix given in full
/// row-major storage (lower triangle read), returning the packed lower
/// factor. Retries once with a tiny diagonal jitter before failing.
pub(crate) fn cholesky_lower(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    fn attempt(matrix: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
        let mut l = vec![0.0; n * (n + 1) / 2];
        let row_start = |i: usize| i * (i + 1) / 2;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = matrix[i * n + j] + if i == j { jitter } else { 0.0 };
                for k in 0..j {
                    sum -= l[row_start(i) + k] * l[row_start(j) + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    l[row_start(i) + j] = sum.sqrt();
                } else {
                    l[row_start(i) + j] = sum / l[row_start(j) + j];
                }
            }
        }
        Some(l)
    }
    attempt(matrix, n, 0.0)
        .or_else(|| attempt(matrix, n, 1e-10))
        .ok_or_else(|| {
            Error::NumericalSingularity("covariance matrix is not positive definite".into())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::sample_motion;
    use rand::SeedableRng;

    #[test]
    fn zero_path_gives_zero() {
        let path = GridPath {
            m: 500,
            values: vec![0.0; 500],
        };
        for family in [
            LimitFamily::new(FamilyKind::BridgeSup, 0.0).unwrap(),
            LimitFamily::new(FamilyKind::WeightedBridgeSup, 0.05).unwrap(),
            LimitFamily::new(FamilyKind::BridgeL2, 0.0).unwrap(),
            LimitFamily::new(FamilyKind::HSup, 0.0).unwrap(),
            LimitFamily::new(FamilyKind::DSup, 0.05).unwrap(),
            LimitFamily::new(FamilyKind::FSup, 0.05).unwrap(),
            LimitFamily::new(FamilyKind::JSup, 0.05).unwrap(),
        ] {
            assert_eq!(eval_functional(&family, &path).unwrap(), 0.0);
        }
    }

    #[test]
    fn omega_at_half() {
        let (o11, o12, o22) = omega(0.5);
        assert!((o11 - 0.0625).abs() < 1e-15);
        assert!((o12 - 0.03125).abs() < 1e-15);
        assert!((o22 - 0.020833333333333332).abs() < 1e-15);
        let det = o11 * o22 - o12 * o12;
        assert!((det - 3.2552083333e-4).abs() < 1e-12);
    }

    #[test]
    fn covariance_formula_values() {
        assert!((h_cov(0.25, 0.5) - (-0.015625)).abs() < 1e-15);
        assert!((j_cov(0.25, 0.5) - 0.7698003589195010).abs() < 1e-12);
        assert_eq!(d_cov(0.3, 0.3), 1.0);
        assert!((j_cov(0.4, 0.4) - 1.0).abs() < 1e-12);
        assert!((bridge_cov(0.25, 0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn f_lambda_has_omega_covariance() {
        // E[(1/2) Lambda' Omega^{-1} Lambda] = 1 at each t when the
        // transcription is consistent; check t = 0.5 within 3 SE
        let m = 1000;
        let reps = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..reps {
            let path = sample_motion(m, &mut rng);
            let dt = 1.0 / m as f64;
            let mut int_w = 0.0;
            let mut prev = 0.0;
            let mut k2_half = 0.0;
            let mut k2_one = 0.0;
            for (i, &w) in path.values.iter().enumerate() {
                int_w += 0.5 * (prev + w) * dt;
                prev = w;
                let t = (i + 1) as f64 / m as f64;
                if i + 1 == m / 2 {
                    k2_half = t * w - int_w;
                }
                if i + 1 == m {
                    k2_one = t * w - int_w;
                }
            }
            let (l1, l2) = lambda(0.5, path.values[m / 2 - 1], k2_half, path.values[m - 1], k2_one);
            let q = f_quad(0.5, l1, l2).unwrap();
            sum += q;
            sum_sq += q * q;
        }
        let mean = sum / reps as f64;
        let se = ((sum_sq / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se,
            "mean quad form {mean}, se {se}"
        );
    }

    #[test]
    fn cholesky_small_case() {
        let m = vec![1.0, 0.5, 0.5, 1.0];
        let l = cholesky_lower(&m, 2).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-15);
        assert!((l[1] - 0.5).abs() < 1e-15);
        assert!((l[2] - 0.75f64.sqrt()).abs() < 1e-15);
        let bad = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_lower(&bad, 2).is_err());
    }

    #[test]
    fn jsup_sampler_matches_eval() {
        let sampler = JsupSampler::build(0.05, 500).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = sampler.sample_path(&mut rng);
        let family = LimitFamily::new(FamilyKind::JSup, 0.05).unwrap();
        let sup = eval_functional(&family, &path).unwrap();
        let direct = path.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(sup > 0.0);
        assert_eq!(sup, direct);
    }
}
