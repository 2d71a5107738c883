//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("segment {0} is empty")]
    EmptySegment(i64),

    #[error("dataset '{0}' is empty")]
    EmptyDataset(String),

    #[error("minsupport mismatch: segment {segment_id} mined at {found}, synthesis configured at {expected}")]
    ConfigMismatch {
        segment_id: i64,
        found: String,
        expected: String,
    },

    #[error("sample size {sample_size} exceeds dataset size {dataset_size}")]
    SampleTooLarge {
        sample_size: usize,
        dataset_size: usize,
    },

    #[error("source tree is empty")]
    EmptyTree,

    #[error("leaf node '{0}' has no dataset")]
    LeafWithoutData(String),

    #[error("duplicate node id '{0}' in source tree")]
    DuplicateNodeId(String),

    #[error("record universe is empty")]
    EmptyUniverse,

    #[error("event ({record_id}, {timestamp}) outside window ({window_start}, {window_end}]")]
    OutOfWindowEvent {
        record_id: u64,
        timestamp: u64,
        window_start: u64,
        window_end: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
