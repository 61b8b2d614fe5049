use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Variants are grouped loosely by the module that raises them. The CLI maps
/// them onto exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    // manifests and I/O
    #[error("{path}: line {line}: malformed row: {reason}")]
    MalformedRow { path: PathBuf, line: usize, reason: String },
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("probability {value} out of range [0, 1] (item `{id}`)")]
    ProbabilityOutOfRange { id: String, value: f64 },
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("index {index} out of range for ground set of size {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("item `{0}` has no probability annotation")]
    MissingProbability(String),
    #[error("class {0} has no items")]
    EmptyClass(usize),

    // information theory
    #[error("distribution is not normalized (total mass {0})")]
    NotNormalized(f64),
    #[error("value {0} outside the admissible range")]
    OutOfRange(f64),

    // matrices and DPPs
    #[error("empty input")]
    EmptyInput,
    #[error("eigenvalue {value} lies outside [0, 1] beyond tolerance {tol}")]
    EigenvalueOutOfBound { value: f64, tol: f64 },
    #[error("eigendecomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("det(S + I) = {0} is not positive")]
    SingularPartition(f64),
    #[error("ground set of size {n} exceeds the enumeration limit {max}")]
    GroundSetTooLarge { n: usize, max: usize },
    #[error("orthogonalization collapsed (residual norm {0:e})")]
    OrthogonalizationCollapse(f64),
    #[error("k = {k} exceeds ground set size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("every subset of size {0} has zero probability")]
    DegenerateSupport(usize),

    // losses and training
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch shape does not match config: {0}")]
    ConfigMismatch(String),
    #[error("class {class} has {size} items, need at least {needed}")]
    ClassTooSmall { class: usize, size: usize, needed: usize },
    #[error("loss became non-finite at step {0}")]
    NonFiniteLoss(usize),
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code for the CLI: 2 for input problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MalformedRow { .. }
            | Error::DuplicateId(_)
            | Error::ProbabilityOutOfRange { .. }
            | Error::EmptyManifest
            | Error::Io { .. }
            | Error::MissingProbability(_)
            | Error::EmptyClass(_)
            | Error::DegenerateConfig(_)
            | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
