//! Boundary cropping of candidate changepoint indices.
//!
//! Weighted-maximum statistics diverge when candidates too close to either
//! boundary are allowed, so those tests maximize only over a cropped index
//! set. A fraction `delta` is realized on the integers by dropping the
//! first and last `ceil(n * delta)` candidates, so each retained split
//! leaves strictly more than `n * delta` observations on both sides.

use crate::error::{Error, Result};

/// Validate a cropping fraction: must lie in (0, 0.5).
pub fn validate_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) || !delta.is_finite() {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(())
}

/// Admissible candidate indices for a cropped statistic.
///
/// Intersects the margin-cropped set `{m+1, ..., n-1-m}` with
/// `m = ceil(n * delta)` against the test's base range `lo..=hi`, and
/// returns `(lo, hi)` of the intersection. `delta = None` means no
/// cropping. Errors with `EmptyCropRange` when nothing remains.
pub fn admissible_range(
    n: usize,
    delta: Option<f64>,
    lo: usize,
    hi: usize,
) -> Result<(usize, usize)> {
    let (mut a, mut b) = (lo, hi);
    if let Some(delta) = delta {
        validate_delta(delta)?;
        let m = (n as f64 * delta).ceil() as usize;
        a = a.max(m + 1);
        b = b.min(n.saturating_sub(1 + m));
    }
    if a > b {
        return Err(Error::EmptyCropRange {
            delta: delta.unwrap_or(0.0),
            n,
        });
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_examples() {
        // n = 74: the three standard deltas crop 1, 4 and 8 candidates per side
        assert_eq!(admissible_range(74, Some(0.01), 1, 73).unwrap(), (2, 72));
        assert_eq!(admissible_range(74, Some(0.05), 1, 73).unwrap(), (5, 69));
        assert_eq!(admissible_range(74, Some(0.10), 1, 73).unwrap(), (9, 65));
        // small series still leave a candidate
        assert_eq!(admissible_range(6, Some(0.05), 1, 5).unwrap(), (2, 4));
        assert_eq!(admissible_range(4, Some(0.10), 1, 3).unwrap(), (2, 2));
    }

    #[test]
    fn empty_and_invalid() {
        assert!(matches!(
            admissible_range(2, Some(0.05), 1, 1),
            Err(Error::EmptyCropRange { .. })
        ));
        assert!(matches!(
            admissible_range(10, Some(0.7), 1, 9),
            Err(Error::InvalidDelta(_))
        ));
        assert!(matches!(
            admissible_range(10, Some(0.0), 1, 9),
            Err(Error::InvalidDelta(_))
        ));
        assert_eq!(admissible_range(10, None, 1, 9).unwrap(), (1, 9));
    }
}
