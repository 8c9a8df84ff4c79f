use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("{what} = {value} is out of range ({allowed})")]
    Range {
        what: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular value decomposition failed to converge for a {rows}x{cols} matrix")]
    FactorizationFailed { rows: usize, cols: usize },

    #[error("degenerate spectrum: |y[{i}]^2 - y[{j}]^2| = {gap:e} is below the simplicity tolerance {tol:e}")]
    RepeatedSingularValue {
        i: usize,
        j: usize,
        gap: f64,
        tol: f64,
    },

    #[error("degenerate spectrum: singular value y[{index}] is zero")]
    ZeroSingularValue { index: usize },

    #[error("SVLET Gram matrix of order {order} is singular (condition estimate {condition:e}) even after ridge; try a smaller K")]
    SolverFailed { order: usize, condition: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FactorizationFailed { .. }
                | Error::RepeatedSingularValue { .. }
                | Error::ZeroSingularValue { .. }
                | Error::SolverFailed { .. }
        )
    }

    pub fn range(what: &'static str, value: f64, allowed: &'static str) -> Self {
        Error::Range {
            what,
            value,
            allowed,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
