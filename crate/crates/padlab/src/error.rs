//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Array dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Unfold/fold geometry is inconsistent or leaves uncovered cells.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A computation produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Normal equations are singular; a positive ridge epsilon fixes this.
    #[error("singular normal equations; retry with ridge epsilon > 0")]
    SingularSystem,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An image file could not be parsed.
    #[error("malformed image: {0}")]
    MalformedImage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
