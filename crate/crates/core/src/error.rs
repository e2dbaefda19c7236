//! Error taxonomy shared by every module in the crate.

/// Failure modes of the toolkit.
///
/// `Domain` and `Range` flag bad inputs (a parameter outside its allowed set,
/// or a level index a custom table does not cover). `UnsupportedModel` means
/// the requested reduction does not exist for the given bath, and
/// `DegenerateModel` that a formula's denominator vanished. `Numerical` is
/// reserved for failures detected while running (non-finite states, trace
/// drift, rank-deficient solves).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("domain: {0}")]
    Domain(String),
    #[error("range: {0}")]
    Range(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
