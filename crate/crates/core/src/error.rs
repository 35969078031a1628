use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value} with error {abs_error} after {segments} segments")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        value: f64,
        abs_error: f64,
        segments: usize,
    },

    #[error("jet order {available} is too low, need at least {required}")]
    InsufficientJetOrder { available: usize, required: usize },

    #[error("degenerate mean reversion: theta1 = {0} lies in the excluded neighbourhood of zero")]
    DegenerateTheta1(f64),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("kernel weights sum to {0}, which is not positive")]
    NonPositiveWeightSum(f64),

    #[error("singular information matrix (determinant {0})")]
    SingularInformation(f64),

    #[error("no successful replications to summarize")]
    EmptySummary,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
