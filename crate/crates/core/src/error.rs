use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record, line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("empty text, line {line}")]
    EmptyText { line: usize },

    #[error("duplicate id {id:?}, lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("conllu line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("conllu line {line}: unknown upos tag {tag:?}")]
    UnknownUpos { line: usize, tag: String },

    #[error("document {doc:?}, sentence {sentence}: {message}")]
    Tree {
        doc: String,
        sentence: usize,
        message: String,
    },

    #[error("no article ids in common between articles and annotations")]
    EmptyJoin,

    #[error("matrix file: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("article {article_id:?}: {source}")]
    Article {
        article_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite loss ({context})")]
    Divergence { context: String },

    #[error("leakage: {0}")]
    Leakage(String),

    #[error("attack record {id:?} has unknown parent {parent_id:?}")]
    OrphanParent { id: String, parent_id: String },

    #[error("synonym lexicon required when synonym_rate > 0")]
    MissingLexicon,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("article {article_id:?}: expected {expected} votes, found {found}")]
    MissingVotes {
        article_id: String,
        expected: usize,
        found: usize,
    },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_article(self, article_id: &str) -> Self {
        Error::Article {
            article_id: article_id.to_string(),
            source: Box::new(self),
        }
    }
}
