use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid frame dimensions {width}x{height}: both sides must be at least 16 px")]
    InvalidDims { width: u32, height: u32 },

    #[error("dimension mismatch: {0}")]
    DimsMismatch(String),

    #[error("pyramid error: {0}")]
    Pyramid(String),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("ordinal {ordinal} lies outside the window of anchor {anchor} (half-width {half})")]
    OutOfWindow {
        ordinal: usize,
        anchor: usize,
        half: usize,
    },

    #[error("track has no annotations")]
    EmptyTrack,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no admissible weight in the sample set")]
    NoWeight,

    #[error("LCC undefined: a map has zero variance")]
    LccUndefined,

    #[error("SIM undefined: a map has zero total mass")]
    SimUndefined,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("missing frame {index} in image sequence")]
    MissingFrame { index: usize },

    #[error("frame {index}: {source}")]
    AtFrame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_frame(index: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtFrame {
            index,
            source: Box::new(e),
        }
    }

    pub(crate) fn parse(offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}
