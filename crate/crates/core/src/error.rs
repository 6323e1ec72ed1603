use thiserror::Error;

/// Errors raised by the simulator and its estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid atom number {0}: at least one atom is required")]
    InvalidAtomNumber(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("mean spin vector vanishes; rotation axis is undefined")]
    DegenerateAxis,
    #[error("gaussian approximation refused: contrast {contrast:.3} is below the validity guard {guard}")]
    LinearizationInvalid { contrast: f64, guard: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("averaging times of the two series do not match")]
    TauMismatch,
    #[error("degenerate fit design: {0}")]
    DegenerateDesign(String),
    #[error("estimator invalid: {0}")]
    EstimatorInvalid(String),
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cycle times differ: {0} s vs {1} s")]
    CycleTimeMismatch(f64, f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
