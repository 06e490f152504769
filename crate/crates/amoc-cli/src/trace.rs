//! Per-candidate statistic traces for external plotting.

use std::io::Write;

use amoc_core::crop::admissible_range;
use amoc_core::meanshift::{cusum_process, lrt_values, snht_values, z_values, SigmaMode};
use amoc_core::trendshift::{d_values, f_values, h_values, j_values};
use amoc_core::{Result, TimeSeries};

use crate::report::TestName;
use crate::CliError;

/// One trace point: candidate index, display label and the per-candidate
/// statistic (signed for process-valued tests).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub label: f64,
    pub statistic: f64,
}

fn label_for(x: &TimeSeries, k: usize) -> f64 {
    x.label_at(k).unwrap_or(k as f64)
}

/// Compute the trace of a test: the candidate-wise values the test
/// maximizes (or, for SCUSUM, sums). Cropped tests emit only admissible
/// candidates; LRT and Fmax omit degenerate ones.
pub fn trace_rows(x: &TimeSeries, test: TestName, delta: Option<f64>) -> Result<Vec<TraceRow>> {
    let n = x.n();
    let delta_used = test.takes_delta().then(|| delta.unwrap_or(0.05));
    let row = |k: usize, statistic: f64| TraceRow {
        k,
        label: label_for(x, k),
        statistic,
    };
    let rows = match test {
        TestName::Cusum => {
            let trace = cusum_process(x, Some(SigmaMode::Estimated))?;
            (1..=n).map(|k| row(k, trace.values[k - 1])).collect()
        }
        TestName::Scusum => {
            let trace = cusum_process(x, Some(SigmaMode::Estimated))?;
            (1..=n)
                .map(|k| {
                    let c = trace.values[k - 1];
                    row(k, c * c)
                })
                .collect()
        }
        TestName::Zmax => {
            let z = z_values(x, SigmaMode::Estimated)?;
            let (lo, hi) = admissible_range(n, delta_used, 1, n - 1)?;
            (lo..=hi).map(|k| row(k, z[k - 1])).collect()
        }
        TestName::Lrt => {
            let values = lrt_values(x)?;
            (1..n)
                .filter_map(|k| values[k - 1].map(|l| row(k, l)))
                .collect()
        }
        TestName::Snht => {
            let values = snht_values(x)?;
            (1..n).map(|k| row(k, values[k - 1])).collect()
        }
        TestName::Dmax => {
            let d = d_values(x)?;
            let (lo, hi) = admissible_range(n, delta_used, 1, n - 1)?;
            (lo..=hi).map(|k| row(k, d[k - 1])).collect()
        }
        TestName::Hmax => {
            let h = h_values(x)?;
            (1..n).map(|k| row(k, h[k - 1])).collect()
        }
        TestName::Fmax => {
            let f = f_values(x)?;
            let (lo, hi) = admissible_range(n, delta_used, 2, n - 2)?;
            (lo..=hi)
                .filter_map(|k| f[k - 2].map(|v| row(k, v)))
                .collect()
        }
        TestName::Jmax => {
            let j = j_values(x)?;
            let (lo, hi) = admissible_range(n, delta_used, 2, n - 2)?;
            (lo..=hi).map(|k| row(k, j[k - 2])).collect()
        }
    };
    Ok(rows)
}

/// Write rows as `k,label,statistic` CSV.
pub fn write_trace(rows: &[TraceRow], mut out: impl Write) -> std::result::Result<(), CliError> {
    writeln!(out, "k,label,statistic").map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        let label = if r.label.fract() == 0.0 && r.label.abs() < 1e15 {
            format!("{}", r.label as i64)
        } else {
            format!("{}", r.label)
        };
        writeln!(out, "{},{},{}", r.k, label, r.statistic).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
