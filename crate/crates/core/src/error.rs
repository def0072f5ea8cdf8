//! Error type shared by every stage of the pipeline.

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical stages and the artifact I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("denominator underflow at s = {s}{}", index_suffix(*.index))]
    DenominatorUnderflow { s: Complex64, index: Option<usize> },

    #[error("sample {0} is too close to zero to invert")]
    NearZeroSample(usize),

    #[error("ill-conditioned least-squares fit (condition estimate {cond:.3e})")]
    IllConditionedFit { cond: f64 },

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("shifted observability system is rank deficient")]
    RankDeficiency,

    #[error("evaluation at a reflected Blaschke root, s = {0}")]
    PoleHit(Complex64),

    #[error("1 - M vanishes at grid index {0}")]
    SensitivitySingular(usize),

    #[error("interpolation points mu[{0}] and lambda[{1}] coincide")]
    CoincidentPoints(usize, usize),

    #[error("singular pencil: {0}")]
    SingularPencil(String),

    #[error("requested order {requested} exceeds numerical rank {rank}")]
    TruncationTooAggressive { requested: usize, rank: usize },

    #[error("resolvent sE - A is singular at s = {0}")]
    ResolventSingular(Complex64),

    #[error("1 + P K vanishes at grid index {0}")]
    AlgebraicLoopSingular(usize),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

fn index_suffix(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" (grid index {i})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
