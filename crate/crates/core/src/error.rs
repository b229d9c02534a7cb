use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Weight parameters outside the admissible range.
    #[error("invalid weight parameters: {0}")]
    InvalidParams(String),

    /// No refinement level `10 * 2^i` with `i <= i_max` met the tolerance.
    #[error(
        "precompute divergence: no n0 = 10*2^i with i <= {i_max} reached mean coupled difference <= {epsilon} (last estimate {last_estimate} at n = {last_n})"
    )]
    PrecomputeDivergence {
        i_max: u32,
        epsilon: f64,
        last_n: usize,
        last_estimate: f64,
    },

    /// The sample is too small for an order-statistic confidence interval.
    #[error("insufficient samples for CI: {0}")]
    InsufficientSamples(String),

    /// Incompatible options, e.g. a critical-value source that does not apply.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
