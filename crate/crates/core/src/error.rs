use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis degree {degree} unsupported (maximum {max})")]
    DegreeUnsupported { degree: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {x} outside the domain [0, 1]")]
    Domain { x: f64 },

    #[error("value {y} outside branch range [{lo}, {hi}]")]
    Range { y: f64, lo: f64, hi: f64 },

    #[error("unknown map `{0}` (expected one of g1, g2, g3, tent)")]
    UnknownMap(String),

    #[error("map `{0}` has no reference density")]
    MissingReferenceDensity(String),

    #[error("singular linear system ({0})")]
    Singular(&'static str),

    #[error("{what} did not converge (residual {residual:e})")]
    NotConverged { what: &'static str, residual: f64 },

    #[error("column {column} of the transfer matrix sums to {sum}, not 1")]
    NotStochastic { column: usize, sum: f64 },

    #[error("fixed point of the transfer matrix is not unique (discrepancy {discrepancy:e})")]
    AmbiguousFixedPoint { discrepancy: f64 },

    #[error("adaptive quadrature tolerance not met: estimate {estimate:e}, error bound {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    #[error("integrand not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// True for errors caused by caller input rather than numerical failure.
    pub fn is_argument_error(&self) -> bool {
        matches!(
            self,
            Error::DegreeUnsupported { .. }
                | Error::InvalidArgument(_)
                | Error::Domain { .. }
                | Error::Range { .. }
                | Error::UnknownMap(_)
                | Error::MissingReferenceDensity(_)
                | Error::Parse { .. }
        )
    }
}
