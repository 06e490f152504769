//! Test dispatch, report assembly and rendering.

use serde::{Deserialize, Serialize};

use amoc_core::inference::{gumbel_pvalue, p_bound, EmbeddedTables, PValueBound, TestFamily};
use amoc_core::limit::{FamilyKind, QuantileTable};
use amoc_core::meanshift::{
    cusum_max_test_with, lrt_test, scusum_test_with, snht_test, zmax_test_with, SigmaMode,
};
use amoc_core::trendshift::{dmax_test, fmax_test, hmax_test, jmax_test, FitRecord};
use amoc_core::{Result, TimeSeries};

/// Every test the CLI can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Zmax,
    Cusum,
    Scusum,
    Lrt,
    Snht,
    Dmax,
    Hmax,
    Fmax,
    Jmax,
}

impl TestName {
    pub fn label(&self) -> &'static str {
        match self {
            TestName::Zmax => "zmax",
            TestName::Cusum => "cusum",
            TestName::Scusum => "scusum",
            TestName::Lrt => "lrt",
            TestName::Snht => "snht",
            TestName::Dmax => "dmax",
            TestName::Hmax => "hmax",
            TestName::Fmax => "fmax",
            TestName::Jmax => "jmax",
        }
    }

    /// Tests whose maximization is boundary-cropped.
    pub fn takes_delta(&self) -> bool {
        matches!(
            self,
            TestName::Zmax | TestName::Dmax | TestName::Fmax | TestName::Jmax
        )
    }

    fn table_family(&self) -> Option<TestFamily> {
        match self {
            TestName::Zmax => Some(TestFamily::Zmax),
            TestName::Cusum => Some(TestFamily::CusumMax),
            TestName::Scusum => Some(TestFamily::Scusum),
            TestName::Dmax => Some(TestFamily::Dmax),
            TestName::Hmax => Some(TestFamily::Hmax),
            TestName::Fmax => Some(TestFamily::Fmax),
            TestName::Jmax => Some(TestFamily::Jmax),
            TestName::Lrt | TestName::Snht => None,
        }
    }
}

/// Fitted segment lines for the trend tests, reported in calendar
/// coordinates when evenly spaced numeric labels exist, otherwise in the
/// internal index coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub left_intercept: f64,
    pub left_slope: f64,
    pub right_intercept: f64,
    pub right_slope: f64,
    /// `label` or `index`
    pub coordinates: String,
}

/// One executed test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub test: TestName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub statistic: f64,
    pub tau_hat: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_label: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<PValueBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantile_95: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    pub warnings: Vec<String>,
}

impl ReportEntry {
    /// Conclusion of the 95% test: the estimated changepoint when the
    /// statistic clears the 95% quantile (or, for the LRT, when the exact
    /// p-value is below 0.05), otherwise homogeneity.
    pub fn conclusion(&self) -> String {
        let reject = match (&self.p_value, self.quantile_95) {
            (Some(PValueBound::Exact { value, .. }), _) => *value < 0.05,
            (_, Some(q)) => self.statistic >= q,
            _ => return "(no reference quantiles)".into(),
        };
        if reject {
            match self.tau_label {
                Some(label) => format!("Changepoint at {}", fmt_label(label)),
                None => format!("Changepoint at k = {}", self.tau_hat),
            }
        } else {
            "Accept homogeneity".into()
        }
    }
}

/// A full analysis report; serializes losslessly to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub tool_version: String,
    pub quantile_source: String,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn new(dataset: impl Into<String>, quantile_source: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            quantile_source: quantile_source.into(),
            entries: Vec::new(),
        }
    }
}

/// Options shared by `test` and `report`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Known noise standard deviation for the studentized mean-shift tests.
    pub sigma_known: Option<f64>,
    /// Simulated table overriding the embedded rows for the p-value bound.
    pub simulated_table: Option<QuantileTable>,
}

/// When labels are evenly spaced numbers, map an index-coordinate line
/// `mu + alpha * t` to label coordinates.
fn label_coordinates(x: &TimeSeries) -> Option<(f64, f64)> {
    let labels = x.labels()?;
    let step = labels[1] - labels[0];
    if step <= 0.0 {
        return None;
    }
    let even = labels
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
    even.then_some((labels[0], step))
}

fn line_to_labels(x: &TimeSeries, mu: f64, alpha: f64) -> (f64, f64, &'static str) {
    match label_coordinates(x) {
        // t = (y - first)/step + 1, so x(y) = mu + alpha (1 - first/step) + (alpha/step) y
        Some((first, step)) => (mu + alpha * (1.0 - first / step), alpha / step, "label"),
        None => (mu, alpha, "index"),
    }
}

fn fit_summary(x: &TimeSeries, fits: &FitRecord) -> FitSummary {
    match fits {
        FitRecord::TwoPhase(f) => {
            let (li, ls, coords) = line_to_labels(x, f.mu1, f.alpha1);
            let (ri, rs, _) = line_to_labels(x, f.mu2, f.alpha2);
            FitSummary {
                left_intercept: li,
                left_slope: ls,
                right_intercept: ri,
                right_slope: rs,
                coordinates: coords.into(),
            }
        }
        FitRecord::Joinpoint { fit, mu, alpha, beta } => {
            let (li, ls, coords) = line_to_labels(x, *mu, *alpha);
            // right line has slope alpha + beta and meets the left line at t = k
            let (ri, rs, _) = line_to_labels(x, mu - beta * fit.k as f64, alpha + beta);
            FitSummary {
                left_intercept: li,
                left_slope: ls,
                right_intercept: ri,
                right_slope: rs,
                coordinates: coords.into(),
            }
        }
    }
}

fn test_family_kind(family: TestFamily) -> FamilyKind {
    match family {
        TestFamily::Zmax => FamilyKind::WeightedBridgeSup,
        TestFamily::CusumMax => FamilyKind::BridgeSup,
        TestFamily::Scusum => FamilyKind::BridgeL2,
        TestFamily::Dmax => FamilyKind::DSup,
        TestFamily::Hmax => FamilyKind::HSup,
        TestFamily::Fmax => FamilyKind::FSup,
        TestFamily::Jmax => FamilyKind::JSup,
    }
}

fn p_for(
    statistic: f64,
    family: TestFamily,
    delta: f64,
    options: &RunOptions,
) -> Result<PValueBound> {
    if let Some(table) = &options.simulated_table {
        if table.family.kind == test_family_kind(family)
            && (table.family.delta - delta).abs() < 1e-12
        {
            return amoc_core::inference::p_bound_from_table(statistic, table);
        }
    }
    p_bound(statistic, family, delta)
}

/// Run one test and assemble its report entry. `delta` falls back to 0.05
/// for the cropped tests.
pub fn run_test(
    x: &TimeSeries,
    test: TestName,
    delta: Option<f64>,
    options: &RunOptions,
) -> Result<ReportEntry> {
    let sigma = match options.sigma_known {
        Some(s) => SigmaMode::Known(s),
        None => SigmaMode::Estimated,
    };
    let delta_used = test.takes_delta().then(|| delta.unwrap_or(0.05));

    struct Raw {
        statistic: f64,
        tau_hat: usize,
        skipped: Vec<usize>,
        fits: Option<FitRecord>,
    }
    let raw = match test {
        TestName::Zmax => {
            let o = zmax_test_with(x, delta_used.unwrap(), sigma)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: None,
            }
        }
        TestName::Cusum => {
            let o = cusum_max_test_with(x, sigma)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: None,
            }
        }
        TestName::Scusum => {
            let o = scusum_test_with(x, sigma)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: None,
            }
        }
        TestName::Lrt => {
            let o = lrt_test(x, delta)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: None,
            }
        }
        TestName::Snht => {
            let o = snht_test(x)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: None,
            }
        }
        TestName::Dmax => {
            let o = dmax_test(x, delta_used.unwrap())?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: o.fits,
            }
        }
        TestName::Hmax => {
            let o = hmax_test(x)?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: o.fits,
            }
        }
        TestName::Fmax => {
            let o = fmax_test(x, delta_used.unwrap())?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: o.fits,
            }
        }
        TestName::Jmax => {
            let o = jmax_test(x, delta_used.unwrap())?;
            Raw {
                statistic: o.statistic,
                tau_hat: o.tau_hat,
                skipped: o.skipped,
                fits: o.fits,
            }
        }
    };

    let mut warnings: Vec<String> = raw
        .skipped
        .iter()
        .map(|k| format!("candidate k = {k} excluded: zero segment variance"))
        .collect();

    let p_value = match test {
        TestName::Lrt => match gumbel_pvalue(raw.statistic, x.n()) {
            Ok(p) => Some(p),
            Err(e) => {
                warnings.push(format!("no exact p-value: {e}"));
                None
            }
        },
        TestName::Snht => {
            warnings.push("no published asymptotic quantiles for the SNHT".into());
            None
        }
        _ => {
            let family = test.table_family().expect("non-lrt/snht have a family");
            Some(p_for(raw.statistic, family, delta_used.unwrap_or(0.0), options)?)
        }
    };

    let quantile_95 = test.table_family().and_then(|family| {
        if let Some(table) = &options.simulated_table {
            if table.family.kind == test_family_kind(family)
                && (table.family.delta - delta_used.unwrap_or(0.0)).abs() < 1e-12
            {
                return table.quantile(0.95);
            }
        }
        EmbeddedTables::published()
            .row(family, delta_used.unwrap_or(0.0))
            .map(|r| r.quantiles[1])
    });

    Ok(ReportEntry {
        test,
        delta: delta_used,
        statistic: raw.statistic,
        tau_hat: raw.tau_hat,
        tau_label: x.label_at(raw.tau_hat),
        p_value,
        quantile_95,
        fit: raw.fits.map(|f| fit_summary(x, &f)),
        warnings,
    })
}

/// The mean-shift suite: `zmax` at the three standard crops, the CUSUM
/// maximum, SCUSUM and the LRT.
pub fn meanshift_suite(x: &TimeSeries, options: &RunOptions) -> Result<Vec<ReportEntry>> {
    let mut entries = Vec::new();
    for delta in [0.01, 0.05, 0.10] {
        entries.push(run_test(x, TestName::Zmax, Some(delta), options)?);
    }
    entries.push(run_test(x, TestName::Cusum, None, options)?);
    entries.push(run_test(x, TestName::Scusum, None, options)?);
    entries.push(run_test(x, TestName::Lrt, None, options)?);
    Ok(entries)
}

/// The trend-shift suite: joinpoint and two-phase tests with fitted lines.
pub fn trendshift_suite(
    x: &TimeSeries,
    delta: Option<f64>,
    options: &RunOptions,
) -> Result<Vec<ReportEntry>> {
    Ok(vec![
        run_test(x, TestName::Jmax, delta, options)?,
        run_test(x, TestName::Fmax, delta, options)?,
    ])
}

fn fmt_label(label: f64) -> String {
    if label.fract() == 0.0 && label.abs() < 1e15 {
        format!("{}", label as i64)
    } else {
        format!("{label}")
    }
}

fn fmt_tau(entry: &ReportEntry) -> String {
    match entry.tau_label {
        Some(l) => fmt_label(l),
        None => entry.tau_hat.to_string(),
    }
}

fn fmt_test(entry: &ReportEntry) -> String {
    match entry.delta {
        Some(d) => format!("{} (delta = {d})", entry.test.label()),
        None => entry.test.label().to_string(),
    }
}

/// Render a report as the tables the CLI prints: mean-shift entries with
/// conclusions and p-value bounds, trend entries with fitted lines.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("dataset: {}\n", report.dataset));
    out.push_str(&format!("quantiles: {}\n\n", report.quantile_source));

    let trendish: Vec<&ReportEntry> = report.entries.iter().filter(|e| e.fit.is_some()).collect();
    let plain: Vec<&ReportEntry> = report.entries.iter().filter(|e| e.fit.is_none()).collect();

    if !plain.is_empty() {
        out.push_str(&format!(
            "{:<22} {:>10} {:>8} {:<26} {}\n",
            "test", "statistic", "tau", "conclusion (95%)", "p-value"
        ));
        for e in &plain {
            let p = e.p_value.as_ref().map_or("-".into(), |p| p.display());
            out.push_str(&format!(
                "{:<22} {:>10.3} {:>8} {:<26} {}\n",
                fmt_test(e),
                e.statistic,
                fmt_tau(e),
                e.conclusion(),
                p
            ));
        }
    }
    if !trendish.is_empty() {
        if !plain.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!(
            "{:<20} {:>7} {:>10} {:>8} {:>10} {:>8} {:>10} {:>8} {}\n",
            "test", "tau", "statistic", "q95", "left-int", "slope", "right-int", "slope", "p-value"
        ));
        for e in &trendish {
            let f = e.fit.as_ref().unwrap();
            let p = e.p_value.as_ref().map_or("-".into(), |p| p.display());
            out.push_str(&format!(
                "{:<20} {:>7} {:>10.3} {:>8.3} {:>10.3} {:>8.4} {:>10.3} {:>8.4} {}\n",
                fmt_test(e),
                fmt_tau(e),
                e.statistic,
                e.quantile_95.unwrap_or(f64::NAN),
                f.left_intercept,
                f.left_slope,
                f.right_intercept,
                f.right_slope,
                p
            ));
        }
    }
    for e in &report.entries {
        for w in &e.warnings {
            out.push_str(&format!("note [{}]: {w}\n", e.test.label()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> TimeSeries {
        let values: Vec<f64> = (1..=40)
            .map(|t| {
                let base = 0.02 * t as f64 + if t > 25 { 0.05 * (t - 25) as f64 } else { 0.0 };
                base + 0.05 * ((t * 37 % 11) as f64 - 5.0)
            })
            .collect();
        let labels: Vec<f64> = (1951..1991).map(|y| y as f64).collect();
        TimeSeries::with_labels(values, labels).unwrap()
    }

    #[test]
    fn entry_has_label_and_pvalue() {
        let x = series();
        let e = run_test(&x, TestName::Cusum, None, &RunOptions::default()).unwrap();
        assert_eq!(e.tau_label, Some(1950.0 + e.tau_hat as f64));
        assert!(e.p_value.is_some());
        assert!(e.quantile_95.is_some());
    }

    #[test]
    fn jmax_fit_in_label_coordinates() {
        let x = series();
        let e = run_test(&x, TestName::Jmax, Some(0.05), &RunOptions::default()).unwrap();
        let f = e.fit.unwrap();
        assert_eq!(f.coordinates, "label");
        // same line evaluated in both coordinate systems agrees at tau
        let y = 1950.0 + e.tau_hat as f64;
        let left_at_tau = f.left_intercept + f.left_slope * y;
        let right_at_tau = f.right_intercept + f.right_slope * y;
        assert!(
            (left_at_tau - right_at_tau).abs() < 1e-8,
            "joinpoint lines must meet at tau"
        );
    }

    #[test]
    fn report_roundtrips_through_json() {
        let x = series();
        let mut report = Report::new("demo", "embedded");
        report.entries = meanshift_suite(&x, &RunOptions::default()).unwrap();
        report
            .entries
            .extend(trendshift_suite(&x, None, &RunOptions::default()).unwrap());
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
        // rendering mentions every test
        let rendered = render_text(&report);
        for e in &report.entries {
            assert!(rendered.contains(e.test.label()));
        }
    }

    #[test]
    fn suite_shapes() {
        let x = series();
        let mean = meanshift_suite(&x, &RunOptions::default()).unwrap();
        assert_eq!(mean.len(), 6);
        assert_eq!(
            mean.iter().filter(|e| e.test == TestName::Zmax).count(),
            3
        );
        let trend = trendshift_suite(&x, None, &RunOptions::default()).unwrap();
        assert_eq!(trend.len(), 2);
        assert!(trend.iter().all(|e| e.fit.is_some()));
    }
}
