use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("asymmetry {max_gap:e} at ({i}, {j}) exceeds tolerance {tol:e}")]
    Asymmetry { i: usize, j: usize, max_gap: f64, tol: f64 },

    #[error("diagonal entry {value:e} at {i} exceeds tolerance {tol:e}")]
    Diagonal { i: usize, value: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid spin value {value} at position {index}; spins must be -1 or +1")]
    InvalidSpin { index: usize, value: i64 },

    #[error("non-finite value at position {index}")]
    NonFiniteInput { index: usize },

    #[error("subset is empty")]
    EmptySubset,

    #[error("coordinate {index} outside the subset has no assignment")]
    MissingAssignment { index: usize },

    #[error("dimension {n} exceeds the enumeration limit {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("all input matrices are numerically zero")]
    AllDegenerate,

    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("incidence matrix {index} has a non-binary entry {value}")]
    NotBinary { index: usize, value: f64 },

    #[error("unique-edge count of member {index} is zero; the bound is vacuous")]
    DegenerateFamily { index: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eta must satisfy 0 < eta <= ||J||_inf = {m}, got {eta}")]
    InvalidEta { eta: f64, m: f64 },

    #[error("no valid cover after {attempts} redraws")]
    RetryExhausted { attempts: usize },

    #[error("weight {value} at coordinate {index} is negative")]
    NegativeWeight { index: usize, value: f64 },

    #[error("||Jx||_2 is zero; the certificate is undefined")]
    ZeroDenominator,

    #[error("cannot place {k} groups of disjoint edges on {n} vertices")]
    TooManyGroups { n: usize, k: usize },

    #[error("||A_theta||_inf = {norm} exceeds the budget {budget}")]
    NormBudgetExceeded { norm: f64, budget: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
