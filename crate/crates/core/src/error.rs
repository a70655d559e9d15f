use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),

    #[error("image {height}x{width} is not divisible into {patch}x{patch} patches")]
    NonDivisibleImage {
        height: usize,
        width: usize,
        patch: usize,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("rig has {cameras} cameras but {inputs} inputs were given")]
    RigMismatch { cameras: usize, inputs: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent point attributes: {0}")]
    InconsistentAttributes(String),

    #[error("could not place box {index} after {attempts} attempts")]
    PlacementFailure { index: usize, attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A malformed binary or text payload. `offset` is the byte position at
    /// which decoding failed.
    #[error("malformed data at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// True for the error kinds that signal incompatible tensor or grid shapes.
    pub fn is_shape_error(&self) -> bool {
        matches!(
            self,
            Error::NonDivisibleImage { .. }
                | Error::ShapeMismatch(_)
                | Error::ChannelMismatch { .. }
                | Error::RigMismatch { .. }
                | Error::DimensionMismatch(_)
                | Error::InconsistentAttributes(_)
        )
    }
}
