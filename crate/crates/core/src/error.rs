use alloc::string::String;

/// Errors raised by the analysis routines.
///
/// Test outcomes (a refuted inequality, a failed marginal comparison) are
/// never errors; they are reported as data in a [`crate::TestReport`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The caller passed arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// The test does not apply to this system (missing payloads, ineligible design).
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    /// The coupling space is too large to build the feasibility matrix.
    #[error(
        "coupling space has {columns} columns, above the cap of {cap}; \
         split the design into smaller sub-designs"
    )]
    Capacity { columns: u128, cap: usize },
    /// The simplex solver hit its iteration cap before reaching an optimum.
    #[error("simplex did not converge within {iterations} iterations")]
    Solver { iterations: usize },
    /// The solver lost too much precision to certify its answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn inapplicable(msg: impl Into<String>) -> Error {
    Error::Inapplicable(msg.into())
}
