//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors reported by validation, homology, limit, and input-parsing code.
///
/// Input problems (parse failures, invariant violations in declared data)
/// are distinguished from computation problems (horizons exceeded,
/// classification refusals) so the command-line tool can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum PehError {
    /// A declared chain complex fails `d . d = 0` or has mismatched shapes.
    #[error("invalid chain complex: {0}")]
    ComplexInvalid(String),

    /// A vector handed to `homology_class` is not in the kernel of the
    /// boundary map.
    #[error("not a cycle: {0}")]
    NotACycle(String),

    /// Declared chain maps fail to commute with the boundary maps.
    #[error("not a chain map: {0}")]
    NotAChainMap(String),

    /// The two-letter factor census of a substitution did not stabilize
    /// within the allowed number of iterations.
    #[error("legal pair set did not stabilize within {horizon} iterations")]
    NotStabilized { horizon: usize },

    /// A degree-1 connecting column tried to assign different coefficients
    /// to the same generator.
    #[error("inconsistent cycle coefficients: {0}")]
    InconsistentCycle(String),

    /// A direct system kept changing past the inspection horizon.
    #[error("direct limit not resolved within horizon {horizon}: {detail}")]
    HorizonExceeded { horizon: usize, detail: String },

    /// `iso_check` was asked to compare a group it cannot put in normal form.
    #[error("cannot classify group for comparison: {0}")]
    NotClassified(String),

    /// Malformed input file (JSON or TOML).
    #[error("parse error: {0}")]
    ParseError(String),

    /// A named structural check on a declared dataset failed.
    #[error("invariant violation [{check}]: {detail}")]
    InvariantViolation { check: String, detail: String },

    /// A rescaled map required by the weighted transform is not integral.
    #[error("divisibility error: {0}")]
    DivisibilityError(String),

    /// Filesystem failure while reading input.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl PehError {
    /// True when the error describes bad input rather than a computation
    /// that could not finish.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PehError::ComplexInvalid(_)
                | PehError::NotACycle(_)
                | PehError::NotAChainMap(_)
                | PehError::InconsistentCycle(_)
                | PehError::ParseError(_)
                | PehError::InvariantViolation { .. }
                | PehError::DivisibilityError(_)
                | PehError::Io(_)
        )
    }
}
