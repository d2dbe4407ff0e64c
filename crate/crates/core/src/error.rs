use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("sample rate {got} Hz not supported, expected {expected} Hz")]
    SampleRate { got: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("frame of {len} samples too short for order {order}")]
    FrameTooShort { len: usize, order: usize },
    #[error("degenerate frame: zero energy")]
    DegenerateFrame,
    #[error("autocorrelation not positive definite at stage {stage}")]
    NotPositiveDefinite { stage: usize },
    #[error("polynomial root finding did not converge after {iterations} iterations")]
    RootFinding { iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("not enough frames: need {required}, have {available}")]
    NotEnoughFrames { required: usize, available: usize },
    #[error("covariance matrix is not positive definite (try a larger ridge or more data)")]
    SingularCovariance,
    #[error("unknown parameterization `{0}`")]
    UnknownTransform(String),
    #[error("invalid transform chain: {0}")]
    InvalidChain(String),
    #[error("sigma weighting used before weights were fitted")]
    SigmaNotFitted,
    #[error("models disagree on {0}")]
    IncompatibleModels(&'static str),
    #[error("cohort of {size} requested but only {available} other models exist")]
    CohortTooLarge { size: usize, available: usize },
    #[error("unknown speaker `{0}`")]
    UnknownSpeaker(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("invalid filter expression: {0}")]
    Filter(String),
    #[error("scenario `{scenario}`: {reason}")]
    Scenario { scenario: String, reason: String },
}
