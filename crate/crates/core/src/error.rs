use std::io;

use crate::environment::UrlId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("attachment count m = {m} exceeds current node count {nodes}")]
    AttachmentCount { m: usize, nodes: usize },

    #[error("unknown url {0}")]
    UnknownUrl(UrlId),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("histogram has fewer than 2 distinct nonzero-degree bins")]
    InsufficientBins,

    #[error("degenerate scatter")]
    DegenerateScatter,

    #[error("cannot reach {requested} clusters: only {reached} leaves are splittable")]
    ClusteringUnreachable { requested: usize, reached: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),

    #[error("path is not finished")]
    PathNotFinished,

    #[error("no living forager")]
    NoForagers,

    #[error("corrupt {what} at record {index}: {reason}")]
    Corrupt {
        what: &'static str,
        index: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn corrupt(what: &'static str, index: usize, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            what,
            index,
            reason: reason.into(),
        }
    }
}
