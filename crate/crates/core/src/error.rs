use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable input: {0}")]
    Unreadable(String),

    #[error("too many malformed records: {bad} of {total} (tolerance {allowed})")]
    TooManyBadRecords {
        bad: usize,
        total: usize,
        allowed: usize,
    },

    #[error("no events")]
    NoEvents,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset span of {span_secs}s is shorter than the window duration of {window_secs}s")]
    SpanTooShort { span_secs: i64, window_secs: i64 },

    #[error("empty layer list")]
    NoLayers,

    #[error("assignment does not cover node-slice (user {user}, window {window})")]
    MissingSlice { user: String, window: usize },

    #[error("community {0} has no members in its anchor window")]
    EmptyAnchor(u32),

    #[error("empty target set")]
    EmptyTargets,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("missing {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifacts(Vec<PathBuf>),

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.to_string(),
        }
    }
}
