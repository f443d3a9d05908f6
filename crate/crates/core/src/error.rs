use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (shapes, non-finite entries, bad weights).
    #[error("input error: {0}")]
    Input(String),

    /// A hypothesis required by a closed-form bound or check does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exact enumeration would exceed the configured budget.
    #[error("undecided by enumeration: {what} needs {required} evaluations, budget is {budget}")]
    Budget { what: &'static str, required: u128, budget: u64 },

    /// Integer result does not fit in 128 bits.
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("no solution found: {0}")]
    NoSolution(String),

    #[error("singular Newton matrix at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64, last: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
