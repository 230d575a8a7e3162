use alloc::string::String;

/// Errors raised by validation and by operations with hard preconditions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    DimensionMismatch { expected_h: usize, expected_w: usize, got_h: usize, got_w: usize },
    #[error("image must be at least 8x8, got {height}x{width}")]
    TooSmall { height: usize, width: usize },
    #[error("buffer holds {got} values, expected {expected}")]
    BufferLength { expected: usize, got: usize },
    #[error("label {label} at pixel {pixel} is out of range for {classes} classes")]
    LabelOutOfRange { pixel: usize, label: u8, classes: usize },
    #[error("class count must be at least 2, got {0}")]
    TooFewClasses(usize),
    #[error("non-finite intensity at pixel {0}")]
    NonFinite(usize),
    #[error("intensity {value} at pixel {pixel} lies outside [0, 1]")]
    IntensityRange { pixel: usize, value: f64 },
    #[error("negative or non-finite evidence at index {0}")]
    InvalidEvidence(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("scene generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("model output has shape {got_v}x{got_k}, expected {expected_v}x{expected_k}")]
    ModelShape { expected_v: usize, expected_k: usize, got_v: usize, got_k: usize },
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;
