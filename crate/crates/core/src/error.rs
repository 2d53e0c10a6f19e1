use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported operator class: {0}")]
    UnsupportedClass(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("no divergence witness within {cap} steps (best log-magnitude {best_log:.3} vs log-bound {log_bound:.3})")]
    StepCapExceeded { cap: u64, best_log: f64, log_bound: f64 },

    #[error("no tail bound for this rule family; numeric estimate {numeric_estimate} from {terms_used} terms")]
    UnknownTail { numeric_estimate: f64, terms_used: u64 },

    #[error("tail not summable: {0}")]
    NotSummable(String),

    #[error("operator is not compact")]
    NotCompact,

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("similarity rejected: weighted shifts are not similar ({0})")]
    NotSimilar(String),
}

impl Error {
    /// Stable machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty-input",
            Error::InvalidInput(_) => "invalid-input",
            Error::UnsupportedClass(_) => "unsupported-class",
            Error::PreconditionViolated(_) => "precondition-violated",
            Error::StepCapExceeded { .. } => "step-cap-exceeded",
            Error::UnknownTail { .. } => "unknown-tail",
            Error::NotSummable(_) => "not-summable",
            Error::NotCompact => "not-compact",
            Error::ConvergenceFailure(_) => "convergence-failure",
            Error::NotSimilar(_) => "not-similar",
        }
    }
}
