//! `amoc` — at-most-one-changepoint tests for time series.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use amoc_cli::ingest::{ingest, InputSpec};
use amoc_cli::report::{
    meanshift_suite, render_text, run_test, trendshift_suite, Report, RunOptions, TestName,
};
use amoc_cli::trace::{trace_rows, write_trace};
use amoc_cli::{exit_code, CliError};
use amoc_core::inference::TABLE_PROBS;
use amoc_core::limit::cache::QuantileCache;
use amoc_core::limit::{estimate_quantiles, FamilyKind, LimitFamily, QuantileTable, SimConfig};

#[derive(Parser)]
#[command(
    name = "amoc",
    version,
    about = "At-most-one-changepoint tests for mean and trend shifts in time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Input CSV file
    #[arg(long)]
    input: PathBuf,
    /// Column with the observations (name, or 1-based index without a header)
    #[arg(long)]
    value_column: Option<String>,
    /// Optional column with strictly increasing time labels (e.g. years)
    #[arg(long)]
    time_column: Option<String>,
    /// Field delimiter
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// The file has no header row
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn spec(&self) -> InputSpec {
        InputSpec {
            path: self.input.clone(),
            value_column: self.value_column.clone(),
            time_column: self.time_column.clone(),
            delimiter: self.delimiter as u8,
            header: !self.no_header,
        }
    }
}

/// Quantile-table families, named after the tests they calibrate.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyName {
    Zmax,
    Cusum,
    Scusum,
    Dmax,
    Hmax,
    Fmax,
    Jmax,
}

impl FamilyName {
    fn kind(&self) -> FamilyKind {
        match self {
            FamilyName::Zmax => FamilyKind::WeightedBridgeSup,
            FamilyName::Cusum => FamilyKind::BridgeSup,
            FamilyName::Scusum => FamilyKind::BridgeL2,
            FamilyName::Dmax => FamilyKind::DSup,
            FamilyName::Hmax => FamilyKind::HSup,
            FamilyName::Fmax => FamilyKind::FSup,
            FamilyName::Jmax => FamilyKind::JSup,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a single changepoint test
    Test {
        #[command(flatten)]
        input: InputArgs,
        /// Which test to run
        #[arg(long, value_enum)]
        test: TestName,
        /// Cropping fraction for the boundary-cropped tests (default 0.05)
        #[arg(long)]
        delta: Option<f64>,
        /// Treat the noise standard deviation as known
        #[arg(long)]
        sigma_known: Option<f64>,
        /// Take p-value bounds from a simulated quantile cache instead of
        /// the embedded published tables
        #[arg(long)]
        quantiles_cache: Option<PathBuf>,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Simulate asymptotic null quantiles of a test-statistic family
    Quantiles {
        #[arg(long, value_enum)]
        family: FamilyName,
        /// Cropping fraction (required for zmax, dmax, fmax, jmax)
        #[arg(long)]
        delta: Option<f64>,
        /// Monte Carlo replications
        #[arg(long)]
        reps: usize,
        /// Grid points of the discretized limit process
        #[arg(long)]
        grid: usize,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Worker threads (0 = all cores); results do not depend on it
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Quantile cache file
        #[arg(long, default_value = "quantile-cache.json")]
        cache: PathBuf,
    },
    /// Emit the per-candidate statistic trace as CSV
    Trace {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        test: TestName,
        #[arg(long)]
        delta: Option<f64>,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full test suite and print a result table
    Report {
        #[command(flatten)]
        input: InputArgs,
        /// Which suite to run
        #[arg(long, value_enum)]
        suite: Suite,
        /// Cropping fraction for the cropped tests (default 0.05)
        #[arg(long)]
        delta: Option<f64>,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Suite {
    Meanshift,
    Trendshift,
}

fn dataset_name(path: &PathBuf) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_override(
    path: &Option<PathBuf>,
    test: TestName,
    delta: Option<f64>,
) -> Result<Option<QuantileTable>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let cache = QuantileCache::load(path)?;
    let delta = if test.takes_delta() {
        delta.unwrap_or(0.05)
    } else {
        0.0
    };
    // latest matching record wins when several configs are cached
    let found = cache
        .records
        .iter()
        .rev()
        .find(|t| {
            let kind_matches = match test {
                TestName::Zmax => t.family.kind == FamilyKind::WeightedBridgeSup,
                TestName::Cusum => t.family.kind == FamilyKind::BridgeSup,
                TestName::Scusum => t.family.kind == FamilyKind::BridgeL2,
                TestName::Dmax => t.family.kind == FamilyKind::DSup,
                TestName::Hmax => t.family.kind == FamilyKind::HSup,
                TestName::Fmax => t.family.kind == FamilyKind::FSup,
                TestName::Jmax => t.family.kind == FamilyKind::JSup,
                TestName::Lrt | TestName::Snht => false,
            };
            kind_matches && (t.family.delta - delta).abs() < 1e-12
        })
        .cloned();
    Ok(found)
}

fn write_json(report: &Report, path: &PathBuf) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Io(e.to_string()))
}

fn print_table(table: &QuantileTable, source: &str) {
    let delta = table.family.delta;
    if delta > 0.0 {
        println!("family: {} (delta = {delta})", table.family.kind.name());
    } else {
        println!("family: {}", table.family.kind.name());
    }
    println!(
        "config: reps = {}, grid = {}, seed = {}",
        table.config.replications, table.config.grid, table.config.seed
    );
    println!("source: {source}");
    for (p, q) in table.probs.iter().zip(&table.quantiles) {
        println!("  {:>5.1}%  {q:.3}", p * 100.0);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test {
            input,
            test,
            delta,
            sigma_known,
            quantiles_cache,
            json,
        } => {
            let x = ingest(&input.spec())?;
            let options = RunOptions {
                sigma_known,
                simulated_table: load_override(&quantiles_cache, test, delta)?,
            };
            let entry = run_test(&x, test, delta, &options)?;
            let mut report = Report::new(
                dataset_name(&input.input),
                if options.simulated_table.is_some() {
                    "simulated-cache"
                } else {
                    "embedded"
                },
            );
            report.entries.push(entry);
            print!("{}", render_text(&report));
            if let Some(path) = json {
                write_json(&report, &path)?;
            }
            Ok(())
        }
        Command::Quantiles {
            family,
            delta,
            reps,
            grid,
            seed,
            workers,
            cache,
        } => {
            let limit_family = LimitFamily::new(family.kind(), delta.unwrap_or(0.0))
                .map_err(CliError::Core)?;
            let config = SimConfig {
                replications: reps,
                grid,
                seed,
                workers,
            };
            let mut store = QuantileCache::load(&cache)?;
            if let Some(table) = store.find(&limit_family, &TABLE_PROBS, &config) {
                print_table(table, "cache");
                return Ok(());
            }
            let table = estimate_quantiles(&limit_family, &config).map_err(CliError::Core)?;
            store.insert(table.clone());
            store.save(&cache)?;
            print_table(&table, "simulated");
            Ok(())
        }
        Command::Trace {
            input,
            test,
            delta,
            out,
        } => {
            let x = ingest(&input.spec())?;
            let rows = trace_rows(&x, test, delta)?;
            let file = std::fs::File::create(&out)
                .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            write_trace(&rows, std::io::BufWriter::new(file))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Report {
            input,
            suite,
            delta,
            json,
        } => {
            let x = ingest(&input.spec())?;
            let options = RunOptions::default();
            let mut report = Report::new(dataset_name(&input.input), "embedded");
            report.entries = match suite {
                Suite::Meanshift => meanshift_suite(&x, &options)?,
                Suite::Trendshift => trendshift_suite(&x, delta, &options)?,
            };
            print!("{}", render_text(&report));
            if let Some(path) = json {
                write_json(&report, &path)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
