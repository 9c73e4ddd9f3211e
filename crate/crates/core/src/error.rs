use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid packet layout: {0}")]
    Layout(&'static str),
    #[error("invalid control information: {0}")]
    ControlInfo(&'static str),
    #[error("malformed control information bits: {0}")]
    Decode(&'static str),
    #[error("input too short: need {needed} samples or bits, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown modulation scheme")]
    UnknownScheme,
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported FFT size {0}")]
    UnsupportedFft(usize),
    #[error("no packet detected")]
    DetectionFailed,
    #[error("invalid subcarrier allocation: {0}")]
    Allocation(&'static str),
}
