use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveletError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("point outside chart domain (polar angle {polar:.4} from the {hemisphere} pole)")]
    OutsideChart { polar: f64, hemisphere: &'static str },

    #[error("window support is empty for case={case}, m={m}, j={j}, mu={mu}")]
    EmptySupport { case: &'static str, m: i32, j: i32, mu: f64 },

    #[error("indices mix cases or dimensions: {0}")]
    Mismatch(String),

    #[error("quadrature needs {required} nodes per axis, maximum is {max}")]
    QuadratureBudget { required: usize, max: usize },

    #[error("grid resolution {available} too small for the requested offsets; need {required}")]
    InsufficientResolution { required: usize, available: usize },

    #[error("only {usable} usable entries for a decay fit, need at least {required}")]
    TooFewEntries { usable: usize, required: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, CurveletError>;
