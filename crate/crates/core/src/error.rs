use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("fit failed ({model}): {reason} after {iterations} iterations, last cost {last_cost:.6e}")]
    Fit {
        model: String,
        reason: String,
        iterations: usize,
        last_cost: f64,
    },

    #[error("invalid sequence: {0}")]
    Sequence(String),

    #[error("trace structure: {0}")]
    Structure(String),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("count ratio {value} outside calibration range [{lo}, {hi}]")]
    CalibrationRange { value: f64, lo: f64, hi: f64 },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
