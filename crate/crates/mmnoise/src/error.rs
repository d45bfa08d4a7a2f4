use std::path::PathBuf;

/// Crate-wide error type. Variants are grouped by how the command line
/// interface maps them to exit codes: configuration problems (exit 2),
/// data problems (exit 3), and solver non-convergence (exit 4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("duplicate quote key (expiry_days={expiry_days}, strike={strike})")]
    DuplicateQuote { expiry_days: u32, strike: f64 },

    #[error("dates not strictly increasing at row {row}")]
    NonMonotoneDates { row: usize },

    #[error("insufficient data: {msg} (required {required}, got {actual})")]
    InsufficientData {
        msg: String,
        required: usize,
        actual: usize,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("volatility model fit did not converge within the iteration budget (best loglik {best_loglik})")]
    GarchNoConvergence {
        /// Best iterate reached when the budget ran out.
        best: Box<crate::volmodels::ArmaGarchFit>,
        best_loglik: f64,
    },

    #[error("pipeline stage '{stage}' failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateQuote { .. }
            | Error::NonMonotoneDates { .. }
            | Error::InsufficientData { .. }
            | Error::DegenerateData(_) => 3,
            Error::Convergence(_) | Error::GarchNoConvergence { .. } => 4,
            Error::Pipeline { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
