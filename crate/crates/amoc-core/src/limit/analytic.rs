//! Series evaluation of the Brownian bridge supremum law, used as an
//! analytic cross-check for the simulated `BridgeSup` quantiles.

/// Kolmogorov tail `P(sup |B| > x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)`,
/// truncated once terms fall below 1e-12. For `x <= 0` the probability
/// is 1.
pub fn kolmogorov_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..1000 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Quantile of `sup |B|` at probability `p`, by bisection on the tail
/// series.
pub fn kolmogorov_sup_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let tail = 1.0 - p;
    let (mut lo, mut hi) = (1e-6, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_tail(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_at_known_point() {
        // the 95% point of sup|B| is 1.358099...
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_tail(-1.0), 1.0);
    }

    #[test]
    fn tail_is_monotone_to_zero() {
        let mut prev = kolmogorov_tail(0.3);
        for i in 1..60 {
            let x = 0.3 + 0.15 * i as f64;
            let cur = kolmogorov_tail(x);
            assert!(cur <= prev);
            prev = cur;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn quantile_root() {
        assert!((kolmogorov_sup_quantile(0.95) - 1.358099).abs() < 1e-4);
        assert!((kolmogorov_sup_quantile(0.90) - 1.223848).abs() < 1e-4);
    }
}
