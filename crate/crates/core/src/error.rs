use thiserror::Error;

/// Errors surfaced by any analysis stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate post id {0}")]
    DuplicatePost(String),

    #[error("post {post} references missing parent {parent}")]
    DanglingParent { post: String, parent: String },

    #[error("parent-link cycle through post {0}")]
    ParentCycle(String),

    #[error("post {post} is older than its parent {parent}")]
    TimestampOrder { post: String, parent: String },

    #[error("lexicon is empty")]
    EmptyLexicon,

    #[error("no overlap between predicted and annotated posts")]
    EmptyAnnotationOverlap,

    #[error("annotation for post {0} is outside the 0..=2 score range")]
    AnnotationScoreRange(String),

    #[error("empty sample for statistic {0}")]
    EmptySample(&'static str),

    #[error("sample for {0} needs at least {1} observations")]
    SampleTooSmall(&'static str, usize),

    #[error("sample for {0} has zero variance")]
    ZeroVariance(&'static str),

    #[error("corpus mixes supplied embeddings with text-only posts; spaces are incomparable")]
    MixedEmbeddings,

    #[error("no posts eligible for echo detection: {0}")]
    NoEligiblePosts(String),

    #[error("embedding for post {post} has dimension {got}, expected {expected}")]
    EmbeddingDimension {
        post: String,
        got: usize,
        expected: usize,
    },

    #[error("embedding for post {0} contains a non-finite value")]
    NonFiniteEmbedding(String),

    #[error("echo chamber has no members")]
    EmptyChamber,

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
