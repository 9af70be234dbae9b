use alloc::string::String;
use core::fmt;

/// Address of a historical (source, arm) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    /// Historical source index.
    pub source: usize,
    /// Arm index.
    pub arm: usize,
}

impl Cell {
    /// Cell at `(source, arm)`.
    pub const fn new(source: usize, arm: usize) -> Self {
        Cell { source, arm }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "historical[{}].arm[{}]", self.source, self.arm)
    }
}

/// Errors are split by cause so callers can map them to distinct exit paths.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inputs violate a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A computation degenerated (zero variance, empty argmax, failed bracket).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::Error::Invalid(alloc::format!($($arg)*)) };
}
macro_rules! numerical {
    ($($arg:tt)*) => { $crate::Error::Numerical(alloc::format!($($arg)*)) };
}
pub(crate) use invalid;
pub(crate) use numerical;
