use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at s = {0}")]
    Pole(f64),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("resource limit: {needed_bytes} bytes needed (segment of {segment_len} odd numbers), budget {budget_bytes}")]
    Resource {
        needed_bytes: usize,
        segment_len: usize,
        budget_bytes: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("tolerance unreachable: achieved {achieved:e}, requested {requested:e} ({what})")]
    Tolerance {
        what: String,
        achieved: f64,
        requested: f64,
    },

    #[error("unsupported point lambda = {0} (bifurcation)")]
    Bifurcation(f64),

    #[error("cache: {0}")]
    Cache(#[from] CacheError),

    #[error("io: {0}")]
    Io(String),
}

/// Distinct reasons a cache file is rejected.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CacheError {
    #[error("corrupt header")]
    CorruptHeader,
    #[error("unsupported format revision {0}")]
    Version(u32),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("corrupt record at index {0}")]
    CorruptRecord(u64),
    #[error("bound mismatch: file has X = {found}, requested {requested}")]
    BoundMismatch { found: u64, requested: u64 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
