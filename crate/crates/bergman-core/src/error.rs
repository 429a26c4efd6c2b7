//! Error type shared by the whole crate.

use alloc::string::String;
use core::fmt;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Structured failure modes.
///
/// Numerical soft failures (an unreliable tail bound, an uncertified search)
/// are *not* errors; they are reported through flags on the result types.
/// `Error` is reserved for inputs that make an operation meaningless.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A point or index has the wrong number of coordinates.
    DimensionMismatch { expected: usize, got: usize },
    /// An ellipsoid description is unusable (empty, non-positive or
    /// non-finite exponent, ...).
    InvalidSpec(String),
    /// A parameter value is outside its documented range.
    InvalidInput(String),
    /// A point lies on or outside the closure of the domain where an
    /// interior point was required.  Carries the boundary defect
    /// `sum_k |z_k|^(2 m_k)`.
    OutsideDomain { defect: f64 },
    /// A branch-point coordinate (`w_k = 0`) where a covering map must be
    /// inverted; callers should nudge the sample point instead.
    BranchPoint { coordinate: usize },
    /// The requested map cannot be inverted (it is not biholomorphic).
    NotInvertible,
    /// Two maps or domains that must match do not.
    Incompatible(String),
    /// A size estimate exceeded the configured budget.
    ResourceLimit { required: usize, budget: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid ellipsoid: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::OutsideDomain { defect } => {
                write!(f, "point outside open domain (defect {defect})")
            }
            Error::BranchPoint { coordinate } => {
                write!(f, "coordinate {coordinate} sits on a branch locus")
            }
            Error::NotInvertible => write!(f, "map is not biholomorphic"),
            Error::Incompatible(msg) => write!(f, "incompatible arguments: {msg}"),
            Error::ResourceLimit { required, budget } => {
                write!(f, "size {required} exceeds budget {budget}")
            }
        }
    }
}

impl core::error::Error for Error {}
