//! Error type shared by every pipeline stage.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: line {line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate cik in universe: {}", format_duplicates(.duplicates))]
    DuplicateCik { duplicates: Vec<(String, usize, usize)> },

    #[error("transient fetch failure for cik {cik} ({url}): {message}")]
    Transient { cik: String, url: String, message: String },

    #[error("corrupt document {accession_id}: {message}")]
    CorruptDocument { accession_id: String, message: String },

    #[error("unparseable filing {accession_id}: {message}")]
    UnparseableFiling { accession_id: String, message: String },

    #[error("summarization precondition failed: {0}")]
    EmptyItems(String),

    #[error("summarizer endpoint failure: {0}")]
    Endpoint(String),

    #[error("invalid price {0}: prices must be positive and finite")]
    InvalidPrice(f64),

    #[error("price series {ticker}: {message}")]
    InvalidSeries { ticker: String, message: String },

    #[error("no observation within {max_slip_days} days on or after {date}")]
    UnresolvableDate {
        date: chrono::NaiveDate,
        max_slip_days: i64,
    },

    #[error("unsupported horizon of {0} months")]
    InvalidHorizon(u32),

    #[error("fold plan infeasible: {0}")]
    InfeasiblePlan(String),

    #[error("degenerate training set for {horizon}-month horizon: {message}")]
    DegenerateTraining { horizon: u32, message: String },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingFailure { epoch: usize },

    #[error("prediction file {path}: line {line}: {message}")]
    PredictionSchema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no label at {horizon}-month horizon for example {example_id}")]
    MissingLabel { example_id: String, horizon: u32 },

    #[error("predictions for fold {fold}, trial {trial}, {horizon}-month horizon: {message}")]
    Coverage {
        fold: usize,
        trial: usize,
        horizon: u32,
        message: String,
    },

    #[error("unknown sector name {0:?}")]
    UnknownSector(String),

    #[error("cannot aggregate an empty set of trial results")]
    EmptyAggregate,

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact {path} (produced by stage `{stage}`)")]
    MissingArtifact { path: PathBuf, stage: String },
}

fn format_duplicates(dups: &[(String, usize, usize)]) -> String {
    dups.iter()
        .map(|(cik, a, b)| format!("{cik} (lines {a} and {b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
