//! Error type shared across the crate.

/// Errors reported by evaluators, tables and the reduction engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested integral does not converge.
    #[error("divergent: {0}")]
    Divergent(String),

    /// Panel doubling reached the level cap without meeting the error target.
    /// Carries the last two refinement iterates so callers can judge how far
    /// the refinement got.
    #[error(
        "quadrature did not converge: last iterate {last:e}, previous {previous:e}, \
         delta {delta:e} after {levels} levels (target {target:e})"
    )]
    QuadratureStalled {
        last: f64,
        previous: f64,
        delta: f64,
        levels: u32,
        target: f64,
    },

    /// Rewrite loop exceeded its step budget. Indicates a bug in the rule
    /// set, not a property of the input.
    #[error("reduction exceeded {0} rewrite steps (internal bug guard)")]
    DepthExceeded(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn divergent(msg: impl Into<String>) -> Self {
        Error::Divergent(msg.into())
    }
}
