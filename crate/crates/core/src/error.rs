use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands of a binary operation have different dimensions.
    DimensionMismatch { expected: usize, found: usize },
    /// A matrix was built from data that is not square.
    NotSquare { rows: usize, cols: usize },
    /// A matrix entry is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// `‖U*U − I‖₂` exceeded the unitarity tolerance.
    NotUnitary { defect: f64, tol: f64 },
    /// An eigendecomposition or factorization failed or was inaccurate.
    Numerical { what: &'static str, residual: f64 },
    /// A scalar parameter is outside its domain.
    InvalidParameter { name: &'static str, reason: String },
    /// An index lies outside `1..=n`.
    IndexOutOfRange { index: usize, n: usize },
    /// Polynomial text could not be parsed.
    Parse { position: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Error::NonFinite { row, col } => write!(f, "non-finite entry at ({row}, {col})"),
            Error::NotUnitary { defect, tol } => {
                write!(f, "unitarity defect {defect:e} exceeds tolerance {tol:e}")
            }
            Error::Numerical { what, residual } => {
                write!(f, "numerical failure in {what} (residual {residual:e})")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::IndexOutOfRange { index, n } => {
                write!(f, "index {index} outside 1..={n}")
            }
            Error::Parse { position, reason } => {
                write!(f, "parse error at token {position}: {reason}")
            }
        }
    }
}

impl core::error::Error for Error {}
