use std::fmt;

/// Reason a CSV file could not be ingested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IngestKind {
    Gap,
    Parse,
    Empty,
    Header,
}

impl fmt::Display for IngestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IngestKind::Gap => "gap",
            IngestKind::Parse => "parse",
            IngestKind::Empty => "empty",
            IngestKind::Header => "header",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ingest error ({kind}): {detail}")]
    Ingest { kind: IngestKind, detail: String },
    #[error("alignment error: {0}")]
    Align(String),
    #[error("generator error: {0}")]
    Gen(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn ingest(kind: IngestKind, detail: impl Into<String>) -> Self {
        Error::Ingest {
            kind,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Ingest { .. } => "ingest",
            Error::Align(_) => "align",
            Error::Gen(_) => "gen",
            Error::Split(_) => "split",
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Divergence(_) => "divergence",
            Error::Metric(_) => "metric",
            Error::DegenerateMetric(_) => "degenerate_metric",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
