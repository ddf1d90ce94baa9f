//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants carry enough context to produce an actionable message; none of
/// them wrap foreign error types so the enum stays `Clone` and comparable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A moment of the innovation that does not exist (Student-t with too
    /// few degrees of freedom) or lies outside the supported orders 1..=8.
    #[error("moment of order {order} is undefined for this innovation ({detail})")]
    UndefinedMoment { order: u32, detail: String },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// Sampling was requested from a generic density without an inverse-CDF table.
    #[error("sampling from a generic density requires a precomputed inverse-CDF table")]
    GenericSamplingUnsupported,

    /// Persistence outside (0, 1).
    #[error("variance process is not covariance stationary: phi = {phi}")]
    NonStationary { phi: f64 },

    /// A parameter invariant is violated.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A moment recursion left the representable range.
    #[error("{what} overflowed at horizon {horizon}")]
    Overflow { what: String, horizon: usize },

    /// Skewness or kurtosis of a distribution with zero variance.
    #[error("distribution is degenerate: {0}")]
    DegenerateDistribution(String),

    /// A horizon exceeds the configured cap for a high-order sum.
    #[error("horizon {n} exceeds the complexity cap {cap} for {what}")]
    ComplexityBudget { what: String, n: usize, cap: usize },

    /// The requested limit lies in a parameter region with no closed form.
    #[error("unsupported parameter region: {0}")]
    UnsupportedRegion(String),

    /// No Johnson SU distribution has the requested moments.
    #[error("no Johnson SU distribution matches skewness {skewness} and kurtosis {kurtosis}: {detail}")]
    InfeasibleMoments { skewness: f64, kurtosis: f64, detail: String },

    /// A goodness-of-fit statistic was requested on an empty sample.
    #[error("sample is empty")]
    EmptySample,

    /// The hypothesized CDF returned exactly 0 or 1 where the statistic takes its logarithm.
    #[error("cdf value {value} at sorted index {index} makes the statistic infinite")]
    DegenerateCdfValue { index: usize, value: f64 },

    /// Not enough observations for the requested sample statistic.
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    /// Sample with zero dispersion.
    #[error("sample has zero variance")]
    DegenerateSample,

    /// The optimizer stopped before meeting its convergence criteria.
    #[error("optimizer did not converge after {iterations} iterations (best log-likelihood {loglik})")]
    NonConvergence { iterations: usize, loglik: f64, best: Vec<f64> },

    /// A return series without variation.
    #[error("return series has zero variance")]
    DegenerateSeries,

    /// Malformed input row.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input without data rows.
    #[error("input contains no data")]
    EmptyInput,

    /// File system failure, stored as text so the enum stays `Clone`.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
