use core::fmt;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Block sizes were empty or contained a zero.
    InvalidLayout,
    BlockIndexOutOfRange { index: usize, blocks: usize },
    LayoutMismatch,
    LengthMismatch { expected: usize, found: usize },
    /// The direction does not keep the block sum fixed.
    LeavesAffineHull { sum: f64 },
    /// A feasible block point must have at least one positive coordinate.
    EmptySupport,
    Infeasible,
    /// Clique size `s` rounded from `0.4 l` is below 2, so the edge density is undefined.
    CliqueSizeTooSmall { l: usize, s: usize },
    InvalidParameter(&'static str),
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidLayout => write!(f, "block layout needs at least one block and positive block sizes"),
            Error::BlockIndexOutOfRange { index, blocks } => {
                write!(f, "block index {index} out of range for {blocks} blocks")
            }
            Error::LayoutMismatch => write!(f, "block layouts differ"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} coordinates, found {found}")
            }
            Error::LeavesAffineHull { sum } => {
                write!(f, "direction leaves the affine hull (coordinate sum {sum:e})")
            }
            Error::EmptySupport => write!(f, "point has empty support"),
            Error::Infeasible => write!(f, "point is not in the product of simplices"),
            Error::CliqueSizeTooSmall { l, s } => {
                write!(f, "clique size s = {s} < 2 for l = {l}; l is too small")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NonFinite(what) => write!(f, "non-finite {what}"),
        }
    }
}

impl core::error::Error for Error {}
