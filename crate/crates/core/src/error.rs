use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    /// The Gram matrix of the estimated direct channels is (numerically) rank
    /// deficient, so the zero-forcing precoder does not exist.
    #[error("channel Gram matrix is singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("sum of the estimated channels vanishes; common precoder is undefined")]
    DegenerateSum,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("too many singular trials: {redraws} redraws for {trials} trials")]
    RedrawBudget { redraws: usize, trials: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
