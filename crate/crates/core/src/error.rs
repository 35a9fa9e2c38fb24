use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("pole of the gamma function at z = {0}")]
    GammaPole(f64),

    #[error("|gamma(z)| overflows double precision at z = {0}")]
    Overflow(Complex64),

    /// Neither evaluation regime met the requested tolerance. The best
    /// estimate is returned alongside the flag.
    #[error("accuracy loss: estimate {estimate} with relative error ~{rel_err:e}")]
    AccuracyLoss { estimate: Complex64, rel_err: f64 },

    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element is not in the big Bruhat cell (g21 = 0)")]
    NotInBigCell,

    #[error("{0} requires even m (trivial central character); got m = {1}")]
    OddM(&'static str, i32),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("integrand exceeds declared inner envelope: |f({r:e})| = {value:e} > 10 x {bound:e}")]
    EnvelopeViolation { r: f64, value: f64, bound: f64 },

    #[error("cannot bound the integration support: {0}")]
    SupportResolution(String),

    #[error("both sides underflow; residual is undefined")]
    Degenerate,
}

impl Error {
    /// Best available value for errors that carry one.
    pub fn estimate(&self) -> Option<Complex64> {
        match self {
            Error::AccuracyLoss { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }
}
