//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- I/O ----
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // ---- ingestion / parsing ----
    #[error("{path}: file is empty or has no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: missing channel column `{column}`")]
    MissingChannel { path: PathBuf, column: String },

    #[error("{path}: non-uniform sampling at row {row} (t = {time}, expected {expected})")]
    NonUniformSampling {
        path: PathBuf,
        row: usize,
        time: f64,
        expected: f64,
    },

    #[error("{path}: missing value in row {row}, column `{column}`")]
    MissingValue {
        path: PathBuf,
        row: usize,
        column: String,
    },

    #[error("{path}: malformed data in row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: invalid JSON: {message}")]
    Json { path: PathBuf, message: String },

    // ---- shape / configuration ----
    #[error("bad dimension: {0}")]
    BadDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible plant spec: {0}")]
    InfeasibleSpec(String),

    // ---- numerics ----
    #[error("insufficient Markov data: {0}")]
    InsufficientData(String),

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("rank policy cannot be satisfied: {0}")]
    RankPolicyUnsatisfiable(String),

    #[error("too few samples: have {have}, need more than {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("data matrix is rank deficient: {0}")]
    RankDeficientData(String),

    #[error("system is not asymptotically stable (spectral radius {spectral_radius})")]
    UnstableSystem { spectral_radius: f64 },

    #[error("system pencil is identically singular; transmission zeros are undefined")]
    DegeneratePencil,

    #[error("frequency {omega} rad/s outside (0, {nyquist}]")]
    FrequencyOutOfRange { omega: f64, nyquist: f64 },

    #[error("nominal value of channel {channel} is zero")]
    ZeroNominal { channel: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("response exceeds 1e6 after {step} steps; shorten the horizon")]
    HorizonTooLong { step: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Process exit code for each error family.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 2 | I/O (missing or unwritable file) |
/// | 3 | parse (malformed CSV/JSON, missing channel, bad sampling) |
/// | 4 | numeric (rank deficiency, instability, degenerate pencil, ...) |
/// | 5 | configuration (bad flags, dimension mismatch, invalid parameters) |
impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::EmptyFile { .. }
            | Error::MissingChannel { .. }
            | Error::NonUniformSampling { .. }
            | Error::MissingValue { .. }
            | Error::Parse { .. }
            | Error::Json { .. } => 3,
            Error::InsufficientData(_)
            | Error::ZeroMatrix
            | Error::RankPolicyUnsatisfiable(_)
            | Error::TooFewSamples { .. }
            | Error::RankDeficientData(_)
            | Error::UnstableSystem { .. }
            | Error::DegeneratePencil
            | Error::FrequencyOutOfRange { .. }
            | Error::ZeroNominal { .. }
            | Error::HorizonTooLong { .. }
            | Error::Numerical(_) => 4,
            Error::BadDimension(_)
            | Error::DimensionMismatch(_)
            | Error::ShapeMismatch(_)
            | Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::InfeasibleSpec(_) => 5,
        }
    }

    /// Short machine-readable kind, used in structured CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::EmptyFile { .. } => "empty_file",
            Error::MissingChannel { .. } => "missing_channel",
            Error::NonUniformSampling { .. } => "non_uniform_sampling",
            Error::MissingValue { .. } => "missing_value",
            Error::Parse { .. } => "parse",
            Error::Json { .. } => "json",
            Error::BadDimension(_) => "bad_dimension",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Config(_) => "config",
            Error::InfeasibleSpec(_) => "infeasible_spec",
            Error::InsufficientData(_) => "insufficient_data",
            Error::ZeroMatrix => "zero_matrix",
            Error::RankPolicyUnsatisfiable(_) => "rank_policy_unsatisfiable",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::RankDeficientData(_) => "rank_deficient_data",
            Error::UnstableSystem { .. } => "unstable_system",
            Error::DegeneratePencil => "degenerate_pencil",
            Error::FrequencyOutOfRange { .. } => "frequency_out_of_range",
            Error::ZeroNominal { .. } => "zero_nominal",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::HorizonTooLong { .. } => "horizon_too_long",
            Error::Numerical(_) => "numerical",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
