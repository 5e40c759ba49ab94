use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A problem with a single input record. Processing of the remaining
/// records usually continues; callers decide whether to abort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    /// 1-based line number in the input.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for RecordError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {}", .path.display(), .record)]
    Record { path: PathBuf, record: RecordError },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("ARPA format error in {section}: {message}")]
    Arpa { section: String, message: String },
    #[error("overlap coefficient undefined: {0} has no content tokens")]
    UndefinedOverlap(&'static str),
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("sentence has no word tokens")]
    NoWords,
    #[error("replacement vocabulary is empty but replacement probability is {0}")]
    EmptyVocab(f64),
    #[error("search produced no terminal hypothesis")]
    EmptySearch,
    #[error("mismatched input lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
