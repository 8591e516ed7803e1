use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A family parameter outside its admissible range.
    #[error("{family}: parameter {name} = {value} outside {range}")]
    Parameter {
        family: &'static str,
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{0} copula has no Lebesgue density (singular component)")]
    NoDensity(&'static str),

    /// An argument on (or beyond) the boundary of the open unit interval.
    #[error("{name} = {value} is outside the admissible domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("derivative of order {order} is not available (differentiability class allows up to {max})")]
    DerivativeOrder { order: usize, max: usize },

    #[error("generator inverse at 0 is infinite (unbounded support)")]
    InfiniteInverse,

    #[error("dimension {dim} not supported: {reason}")]
    Dimension { dim: usize, reason: &'static str },

    #[error("root not bracketed on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    RootNotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root search did not converge after {iterations} iterations; last bracket [{lo}, {hi}]")]
    RootNoConvergence { lo: f64, hi: f64, iterations: usize },

    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate}, error {error} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootNotBracketed { .. } | Error::RootNoConvergence { .. } | Error::Quadrature { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
