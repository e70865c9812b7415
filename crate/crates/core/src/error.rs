use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} did not converge (partial value {partial:e}, tail {tail:e})")]
    Evaluation {
        what: &'static str,
        partial: f64,
        tail: f64,
    },

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimate {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("I - K is numerically singular (|det| = {0:e}); 1 is in the spectrum")]
    SingularSystem(f64),

    #[error("discretisation failure: determinant {0:e} outside (0, 1]")]
    Discretization(f64),

    #[error("endpoint value at a = {0} is not available (g is singular at the origin)")]
    EndpointUnavailable(f64),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("Poisson bracket is singular: endpoint a_{0} = 0 with nonzero gradient")]
    SingularBracket(usize),

    #[error("Monte Carlo: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
