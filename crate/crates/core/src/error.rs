use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("constant target: R² is undefined when every y is identical")]
    ConstantTarget,

    #[error("unknown song id {0}")]
    UnknownSong(u32),

    #[error("token `{token}` missing from embedding vocabulary (song {song_id})")]
    MissingToken { song_id: u32, token: String },

    #[error("fold {fold} has {rows} rows; at least 2 are required")]
    FoldTooSmall { fold: usize, rows: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
