use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("{name} = {value} is outside the valid domain ({constraint})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A measurement scheme for which the closed-form correlation terms break down.
    #[error("degenerate measurement scheme: {0}")]
    DegenerateScheme(String),

    #[error("operator is not unitary (deviation {deviation:.3e} > {tol:.1e})")]
    NonUnitary { deviation: f64, tol: f64 },

    /// Quadrature, series or bracketing failed to reach the requested tolerance.
    #[error("numerical convergence failure: {0}")]
    Convergence(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
