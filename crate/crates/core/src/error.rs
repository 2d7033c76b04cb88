use std::fmt;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix dimension did not match its peer.
    Dimension { expected: usize, got: usize },
    /// An argument was outside its documented range.
    Parameter(String),
    /// A stream index was fed twice to a structure that requires
    /// each index at most once.
    DuplicateIndex(u64),
    /// A finalizer was called on a structure that never saw data,
    /// or whose retained data is identically zero.
    EmptySketch,
    /// Exhaustive enumeration was requested over a seed space too large
    /// to walk; `bits` is log2 of the requested space.
    SeedSpaceTooLarge { bits: u32 },
    /// The shared net contained no vector with positive overlap, so the
    /// approximate protocol cannot rescale its estimate.
    NetFailure,
    /// A sampled or computed quantity left the region where the result
    /// is meaningful (zero-mass restrictions, vanishing norms, ...).
    Degenerate(String),
    /// The requested operation is not defined for this variant.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DuplicateIndex(i) => write!(f, "duplicate stream index {i}"),
            Error::EmptySketch => write!(f, "finalize called on an empty sketch"),
            Error::SeedSpaceTooLarge { bits } => {
                write!(f, "seed space of 2^{bits} is too large to enumerate")
            }
            Error::NetFailure => write!(f, "net failure: no vector with positive overlap"),
            Error::Degenerate(msg) => write!(f, "degenerate result: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported operation: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
