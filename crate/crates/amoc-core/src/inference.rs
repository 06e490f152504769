//! Conversion of observed statistics into p-values.
//!
//! Most limit laws here have no workable closed form, so inference brackets
//! the p-value between consecutive published asymptotic quantiles (embedded
//! below, at the 90/95/97.5/99/99.9 percent levels). The LRT is the
//! exception: its Gumbel extreme-value limit yields an exact asymptotic
//! p-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::QuantileTable;

/// Probability levels of the embedded rows.
pub const TABLE_PROBS: [f64; 5] = [0.90, 0.95, 0.975, 0.99, 0.999];

/// Upper-tail masses of [`TABLE_PROBS`].
const TABLE_TAILS: [f64; 5] = [0.10, 0.05, 0.025, 0.01, 0.001];

/// Test families with published asymptotic quantile rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    Zmax,
    CusumMax,
    Scusum,
    Dmax,
    Hmax,
    Fmax,
    Jmax,
}

impl TestFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TestFamily::Zmax => "zmax",
            TestFamily::CusumMax => "cusum",
            TestFamily::Scusum => "scusum",
            TestFamily::Dmax => "dmax",
            TestFamily::Hmax => "hmax",
            TestFamily::Fmax => "fmax",
            TestFamily::Jmax => "jmax",
        }
    }

    pub fn requires_delta(&self) -> bool {
        matches!(self, TestFamily::Zmax | TestFamily::Dmax | TestFamily::Fmax | TestFamily::Jmax)
    }
}

/// A p-value, either exact (LRT Gumbel law) or bracketed between table
/// levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PValueBound {
    Exact { value: f64, source: String },
    Bracket { lower: f64, upper: f64, source: String },
}

impl PValueBound {
    /// Upper end of the p-value (the exact value for `Exact`).
    pub fn upper(&self) -> f64 {
        match self {
            PValueBound::Exact { value, .. } => *value,
            PValueBound::Bracket { upper, .. } => *upper,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            PValueBound::Exact { value, .. } => *value,
            PValueBound::Bracket { lower, .. } => *lower,
        }
    }

    /// Human-readable rendering, e.g. `p >= 0.10`, `0.01 <= p < 0.025`,
    /// `p < 0.001` or `p = 0.59`.
    pub fn display(&self) -> String {
        match self {
            PValueBound::Exact { value, .. } => format!("p = {value:.3}"),
            PValueBound::Bracket { lower, upper, .. } => {
                if *upper >= 1.0 {
                    format!("p >= {lower:.2}")
                } else if *lower <= 0.0 {
                    format!("p < {upper:.3}")
                } else {
                    format!("{lower} <= p < {upper}")
                }
            }
        }
    }
}

/// One table row: quantiles at [`TABLE_PROBS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub family: TestFamily,
    /// Cropping fraction; 0 for uncropped families.
    pub delta: f64,
    pub quantiles: [f64; 5],
}

/// The embedded published asymptotic quantile rows: 5 mean-shift rows and
/// 10 trend-shift rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedTables {
    pub rows: Vec<TableRow>,
}

#[rustfmt::skip]
const PUBLISHED_ROWS: [(TestFamily, f64, [f64; 5]); 15] = [
    (TestFamily::Zmax,     0.01, [2.970, 3.225, 3.455, 3.730, 4.331]),
    (TestFamily::Zmax,     0.05, [2.833, 3.095, 3.331, 3.619, 4.241]),
    (TestFamily::Zmax,     0.10, [2.736, 3.007, 3.252, 3.548, 4.171]),
    (TestFamily::CusumMax, 0.00, [1.224, 1.358, 1.480, 1.628, 1.949]),
    (TestFamily::Scusum,   0.00, [0.347, 0.461, 0.581, 0.743, 1.168]),
    (TestFamily::Dmax,     0.01, [3.224, 3.463, 3.679, 3.935, 4.403]),
    (TestFamily::Dmax,     0.05, [3.135, 3.378, 3.603, 3.895, 4.403]),
    (TestFamily::Dmax,     0.10, [3.082, 3.330, 3.559, 3.834, 4.376]),
    (TestFamily::Hmax,     0.00, [0.830, 0.900, 0.962, 1.041, 1.360]),
    (TestFamily::Fmax,     0.01, [6.595, 7.444, 8.273, 9.336, 11.866]),
    (TestFamily::Fmax,     0.05, [6.166, 7.017, 7.846, 8.907, 11.510]),
    (TestFamily::Fmax,     0.10, [5.856, 6.715, 7.536, 8.606, 11.169]),
    (TestFamily::Jmax,     0.01, [2.530, 2.795, 3.038, 3.327, 3.964]),
    (TestFamily::Jmax,     0.05, [2.380, 2.658, 2.908, 3.207, 3.852]),
    (TestFamily::Jmax,     0.10, [2.285, 2.570, 2.827, 3.132, 3.792]),
];

impl EmbeddedTables {
    /// The published rows.
    pub fn published() -> Self {
        Self {
            rows: PUBLISHED_ROWS
                .iter()
                .map(|(family, delta, quantiles)| TableRow {
                    family: *family,
                    delta: *delta,
                    quantiles: *quantiles,
                })
                .collect(),
        }
    }

    pub fn row(&self, family: TestFamily, delta: f64) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.family == family && (r.delta - delta).abs() < 1e-12)
    }
}

/// Bracket the p-value of `statistic` between consecutive quantile levels
/// of the given row. A statistic exactly equal to a quantile is assigned
/// to the more significant bracket.
fn bracket(statistic: f64, quantiles: &[f64], source: String) -> PValueBound {
    let tails = TABLE_TAILS;
    let mut idx: Option<usize> = None;
    for (i, q) in quantiles.iter().enumerate() {
        if statistic >= *q {
            idx = Some(i);
        }
    }
    match idx {
        None => PValueBound::Bracket {
            lower: tails[0],
            upper: 1.0,
            source,
        },
        Some(i) if i + 1 == quantiles.len() => PValueBound::Bracket {
            lower: 0.0,
            upper: tails[i],
            source,
        },
        Some(i) => PValueBound::Bracket {
            lower: tails[i + 1],
            upper: tails[i],
            source,
        },
    }
}

/// Bracketed p-value from the embedded published tables.
pub fn p_bound(statistic: f64, family: TestFamily, delta: f64) -> Result<PValueBound> {
    let tables = EmbeddedTables::published();
    let row = tables.row(family, delta).ok_or_else(|| {
        Error::UnknownFamily(format!("{} with delta {delta}", family.name()))
    })?;
    let source = if row.delta == 0.0 {
        format!("table:{}", family.name())
    } else {
        format!("table:{}:{}", family.name(), row.delta)
    };
    Ok(bracket(statistic, &row.quantiles, source))
}

/// Bracketed p-value from a simulated quantile table (used when a cached
/// simulation explicitly overrides the embedded rows).
pub fn p_bound_from_table(statistic: f64, table: &QuantileTable) -> Result<PValueBound> {
    if table.probs != TABLE_PROBS {
        return Err(Error::InvalidConfig(
            "simulated table must carry the standard probability levels".into(),
        ));
    }
    let source = format!(
        "simulated:{}:seed={}:r={}",
        table.family.kind.name(),
        table.config.seed,
        table.config.replications
    );
    Ok(bracket(statistic, &table.quantiles, source))
}

/// Exact asymptotic LRT p-value from the Gumbel extreme-value law:
///
/// ```text
/// t = sqrt(2 l_max ln ln n) - 2 ln ln n - (1/2) ln ln ln n + ln sqrt(pi)
/// p = 1 - exp(-2 e^{-t})
/// ```
///
/// Requires `n >= 16` so the nested logarithms are well behaved; the
/// convergence of this law is slow, so small-sample p-values would be
/// meaningless anyway.
pub fn gumbel_pvalue(l_max: f64, n: usize) -> Result<PValueBound> {
    if n < 16 {
        return Err(Error::DomainError(format!(
            "Gumbel LRT p-value needs n >= 16 (nested logarithms), got n = {n}"
        )));
    }
    if !(l_max >= 0.0) {
        return Err(Error::DomainError(format!(
            "l_max must be nonnegative, got {l_max}"
        )));
    }
    let lln = (n as f64).ln().ln();
    let llln = (n as f64).ln().ln().ln();
    let t = (2.0 * l_max * lln).sqrt() - 2.0 * lln - 0.5 * llln + std::f64::consts::PI.sqrt().ln();
    let p = 1.0 - (-2.0 * (-t).exp()).exp();
    Ok(PValueBound::Exact {
        value: p,
        source: "gumbel".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_rows_shape() {
        let tables = EmbeddedTables::published();
        assert_eq!(tables.rows.len(), 15);
        for row in &tables.rows {
            for w in row.quantiles.windows(2) {
                assert!(w[0] < w[1], "row {:?} must be strictly increasing", row);
            }
        }
        // deltas decrease quantiles within a family (never increase)
        for family in [TestFamily::Zmax, TestFamily::Dmax, TestFamily::Fmax, TestFamily::Jmax] {
            let rows: Vec<_> = tables.rows.iter().filter(|r| r.family == family).collect();
            assert_eq!(rows.len(), 3);
            for pair in rows.windows(2) {
                for (hi, lo) in pair[0].quantiles.iter().zip(pair[1].quantiles) {
                    assert!(*hi >= lo);
                }
            }
        }
    }

    #[test]
    fn brackets() {
        // 1.655 < 2.833: accept homogeneity with p >= 0.10
        let b = p_bound(1.655, TestFamily::Zmax, 0.05).unwrap();
        assert_eq!(
            b,
            PValueBound::Bracket {
                lower: 0.10,
                upper: 1.0,
                source: "table:zmax:0.05".into()
            }
        );
        assert_eq!(b.display(), "p >= 0.10");

        // 18.759 > 3.852: off the top of the Jmax table
        let b = p_bound(18.759, TestFamily::Jmax, 0.05).unwrap();
        assert!(matches!(
            b,
            PValueBound::Bracket { lower, upper, .. } if lower == 0.0 && (upper - 0.001).abs() < 1e-12
        ));
        assert_eq!(b.display(), "p < 0.001");

        // interior bracket
        let b = p_bound(1.40, TestFamily::CusumMax, 0.0).unwrap();
        assert!(matches!(
            b,
            PValueBound::Bracket { lower, upper, .. }
                if (lower - 0.025).abs() < 1e-12 && (upper - 0.05).abs() < 1e-12
        ));

        // a statistic exactly at a quantile joins the more significant side
        let b = p_bound(1.358, TestFamily::CusumMax, 0.0).unwrap();
        assert!(matches!(
            b,
            PValueBound::Bracket { lower, upper, .. }
                if (lower - 0.025).abs() < 1e-12 && (upper - 0.05).abs() < 1e-12
        ));

        assert!(matches!(
            p_bound(1.0, TestFamily::Zmax, 0.07),
            Err(Error::UnknownFamily(_))
        ));
        assert!(matches!(
            p_bound(1.0, TestFamily::Hmax, 0.05),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn bracket_monotone_in_statistic() {
        let mut prev_upper = f64::INFINITY;
        let mut prev_lower = f64::INFINITY;
        for i in 0..200 {
            let stat = i as f64 * 0.025;
            let b = p_bound(stat, TestFamily::Fmax, 0.05).unwrap();
            assert!(b.upper() <= prev_upper);
            assert!(b.lower() <= prev_lower);
            prev_upper = b.upper();
            prev_lower = b.lower();
        }
    }

    #[test]
    fn gumbel_examples() {
        let p = gumbel_pvalue(3.836, 74).unwrap();
        match &p {
            PValueBound::Exact { value, source } => {
                assert!((value - 0.589).abs() < 5e-4, "got {value}");
                assert_eq!(source, "gumbel");
            }
            _ => panic!("expected exact"),
        }
        // larger statistic, smaller p
        let mut prev = 1.0;
        for i in 1..60 {
            let l = i as f64 * 0.5;
            let p = gumbel_pvalue(l, 74).unwrap().upper();
            assert!(p <= prev);
            assert!(p > 0.0 && p <= 1.0);
            prev = p;
        }
        assert!(matches!(
            gumbel_pvalue(6.0 * 2.0f64.ln(), 6),
            Err(Error::DomainError(_))
        ));
        assert!(gumbel_pvalue(1.0, 16).is_ok());
        assert!(gumbel_pvalue(1.0, 15).is_err());
    }
}
