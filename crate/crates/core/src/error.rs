use thiserror::Error;

pub type Result<T> = std::result::Result<T, AoiError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AoiError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {what} has length {got}, expected {expected}")]
    Shape {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// `g(n)` is so large that `2^g` is not a meaningful transmit power.
    #[error("power overflow: g(n) = {g} bits/symbol exceeds the representable limit")]
    PowerOverflow { g: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("search space of {size} policies exceeds the limit of {limit}")]
    SearchSpace { size: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl AoiError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AoiError::Config(_) | AoiError::Io(_) | AoiError::Shape { .. } | AoiError::Domain(_) => 2,
            AoiError::Infeasible(_) => 3,
            AoiError::PowerOverflow { .. } | AoiError::Numeric(_) | AoiError::SearchSpace { .. } => 4,
        }
    }
}

impl From<std::io::Error> for AoiError {
    fn from(e: std::io::Error) -> Self {
        AoiError::Io(e.to_string())
    }
}
