//! Error type shared by the numeric kernel and the estimator layers.

use core::fmt;

use crate::mat::FieldTag;

/// Everything in this crate that can fail fails with one of these.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two operands had incompatible shapes.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A vector had the wrong length for the matrix it was used with.
    DimensionMismatch { expected: usize, got: usize },
    /// Operands carried different field tags (real vs complex).
    FieldMismatch,
    /// An operation required a specific field.
    WrongField { expected: FieldTag, got: FieldTag },
    /// A matrix required to be Hermitian (symmetric in the real case) was not,
    /// within the 1e-10 relative tolerance.
    NotHermitian { defect: f64 },
    /// Cholesky factorization hit a non-positive pivot (and any ridge retry
    /// was already spent).
    FactorizationFailed { pivot: usize },
    /// Elementwise division hit a zero denominator.
    DivisionByZero { index: usize },
    /// A preprocessor was evaluated at (or too close to) its pole.
    PreprocessorPole { index: usize },
    /// The elementwise denominator in the exponential-preprocessing
    /// covariance came out non-positive.
    ExpDenominator { row: usize, col: usize },
    /// The scale optimization for the spectral initializer degenerated
    /// (zero denominator).
    DegenerateScaling,
    /// The reference signal was identically zero, so a normalized error is
    /// undefined.
    ZeroSignal,
    /// A parameter was outside its documented domain.
    InvalidParam(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected length {expected}, got {got}")
            }
            Error::FieldMismatch => write!(f, "operands have different field tags"),
            Error::WrongField { expected, got } => {
                write!(f, "wrong field: expected {expected:?}, got {got:?}")
            }
            Error::NotHermitian { defect } => {
                write!(f, "matrix is not Hermitian (max asymmetry {defect:e})")
            }
            Error::FactorizationFailed { pivot } => {
                write!(f, "Cholesky factorization failed at pivot {pivot}")
            }
            Error::DivisionByZero { index } => {
                write!(f, "elementwise division by zero at flat index {index}")
            }
            Error::PreprocessorPole { index } => {
                write!(f, "preprocessor pole hit at measurement {index}")
            }
            Error::ExpDenominator { row, col } => write!(
                f,
                "non-positive covariance denominator at entry ({row}, {col})"
            ),
            Error::DegenerateScaling => write!(f, "degenerate scale optimization (zero denominator)"),
            Error::ZeroSignal => write!(f, "reference signal is zero; normalized error undefined"),
            Error::InvalidParam(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
