//! Library surface of the `amoc` command-line tool: CSV ingestion, test
//! dispatch, report assembly and per-candidate trace emission.

pub mod ingest;
pub mod report;
pub mod trace;

use thiserror::Error;

/// CLI-level errors; wraps the core error type for everything beneath the
/// I/O layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("time column is not strictly increasing")]
    NonMonotoneTime,

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] amoc_core::Error),
}

/// Process exit code for an error: 2 for parse/domain problems, 3 for
/// degenerate data, 4 for simulation failures.
pub fn exit_code(err: &CliError) -> i32 {
    use amoc_core::Error as E;
    match err {
        CliError::Parse { .. }
        | CliError::MissingColumn(_)
        | CliError::NonMonotoneTime
        | CliError::Io(_) => 2,
        CliError::Core(core) => match core {
            E::DegenerateVariance(_) | E::EmptyCropRange { .. } | E::SingularDesign(_) => 3,
            E::NumericalSingularity(_) | E::ValidationFailure { .. } => 4,
            _ => 2,
        },
    }
}
