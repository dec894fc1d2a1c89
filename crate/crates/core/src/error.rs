//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid side length must be a power of two (and at least 4) so that the
    /// transforms and the coarse-to-fine schedule are well defined.
    #[error("grid size {0} is not a power of two >= 4")]
    BadGridSize(usize),

    /// Two operands were defined on grids of different sizes.
    #[error("grid size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    /// A Fourier multiplier table violated the conjugate symmetry required to
    /// map real fields to real fields.
    #[error("multiplier is not Hermitian at bin ({0},{1})")]
    NonHermitianMultiplier(usize, usize),

    /// Input field contained NaN or infinite samples.
    #[error("non-finite sample at ({0},{1})")]
    NonFiniteInput(usize, usize),

    /// Unknown filter-bank name.
    #[error("unknown filter bank '{0}' (expected haar, db4, db8, coif4 or coif10)")]
    UnknownFilter(String),

    /// Operation requires the coarsest pyramid slot to be zero.
    #[error("pyramid slot (0,0) must be zero, found {0}")]
    NonZeroMeanSlot(f64),

    /// Regularity parameter out of the admissible range.
    #[error("parameter {name} = {value} out of range: {what}")]
    BadParameter {
        name: &'static str,
        value: f64,
        what: &'static str,
    },

    /// The Riesz-kernel constant degenerates at integer and half-integer
    /// orders; callers must branch to the dedicated integer path instead.
    #[error("riesz constant undefined at order {0} (integer or half-integer)")]
    RieszOrderDegenerate(f64),

    /// The two-scale system for connection coefficients has no usable solution
    /// for this filter/order combination.
    #[error("connection-coefficient system singular for {filter} at order {alpha}: {what}")]
    ConnectionSingular {
        filter: String,
        alpha: f64,
        what: String,
    },

    /// A linear solve failed or verified poorly.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Malformed or unsupported binary file.
    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn bad_param(name: &'static str, value: f64, what: &'static str) -> Self {
        Error::BadParameter { name, value, what }
    }
}

/// Shorthand for the recurring "validate one numeric parameter" case.
pub(crate) fn bad_param(name: &'static str, value: f64, what: &'static str) -> Error {
    Error::BadParameter { name, value, what }
}
