use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lambda = {lambda} lies outside the domain [{lower}, {upper}{}", if *.closed { "]" } else { ")" })]
    OutOfDomain {
        lambda: f64,
        lower: f64,
        upper: f64,
        closed: bool,
    },

    #[error("empty domain: lower bound {lower} is not below upper bound {upper}")]
    EmptyDomain { lower: f64, upper: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("objective unbounded at x = {x}; witness lambdas {witness:?}")]
    UnboundedObjective { x: f64, witness: Vec<f64> },

    #[error("argmax at lambda = {lambda} is not unique: maximizing set spans [{lo}, {hi}]")]
    NonUniqueArgmax { lambda: f64, lo: f64, hi: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("negative exponent {value} at x = {x}")]
    NegativeInput { x: f64, value: f64 },

    #[error("quadrature did not converge: {0}")]
    NotConverged(String),

    #[error("invalid saddle geometry: {0}")]
    GeometryInvalid(String),

    #[error("no (lambda1, c2) pair absorbs ln M = {ln_m} on the search grid")]
    AbsorptionFailed { ln_m: f64 },

    #[error("function is not certified in class W: {0}")]
    NotInClassW(String),

    #[error("moment envelope is not positive at p = {p} (value {value})")]
    NonPositiveEnvelope { p: f64, value: f64 },

    #[error("function is not invertible on the ladder: {0}")]
    NonInvertible(String),

    #[error("regularity condition fails: {0}")]
    RegularityFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
