use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by the library.
///
/// The CLI maps these onto its exit-code contract: I/O and file-format
/// problems are reported as input errors, option problems as usage errors,
/// and everything else as model/numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell- or structure-level problem in an input file, located by
    /// 1-based file line and column.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The data are well-formed but unusable for the requested computation.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A caller-supplied option is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear predictor left the safe range for `exp`.
    #[error(
        "linear predictor overflow: max |eta| = {max_abs_eta:.3e} exceeds {bound}; \
         covariates are likely on wildly different scales - consider standardizing"
    )]
    EtaOverflow { max_abs_eta: f64, bound: f64 },

    /// A risk-set denominator collapsed to zero or a non-finite value.
    #[error("risk-set denominator is not positive at event time {time}")]
    ZeroDenominator { time: f64 },

    /// The censoring survival hit zero before a competing event, violating
    /// the positivity required by the weighting.
    #[error(
        "censoring survival G(t) = 0 at competing-event time {time}; \
         the censoring-positivity condition fails for this sample"
    )]
    CensoringPositivity { time: f64 },

    /// A covariate column carries no information but has a nonzero score.
    #[error("degenerate covariate column '{name}': zero curvature with nonzero score")]
    DegenerateColumn { name: String },

    /// A bootstrap resample had no primary events after the redraw budget.
    #[error("bootstrap resample had no primary events after {attempts} draws")]
    DegenerateReplicate { attempts: usize },

    /// Too many bootstrap replicates were skipped for the estimate to stand.
    #[error("{skipped} of {total} bootstrap replicates skipped (> 20%); estimate unreliable")]
    TooManySkipped { skipped: usize, total: usize },

    /// Brute-force evaluation refused above its size cap.
    #[error("brute-force evaluation refused: n = {n} exceeds cap {cap}")]
    BruteForceCap { n: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
