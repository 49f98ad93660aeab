use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus too short")]
    CorpusTooShort,

    #[error("vocabulary smaller than C (|V| = {vocab}, C = {clusters})")]
    VocabularyTooSmall { vocab: usize, clusters: usize },

    #[error("self-merge of cluster {0}")]
    SelfMerge(usize),

    #[error("nothing to merge: window holds {0} cluster(s)")]
    NothingToMerge(usize),

    #[error("stale merge candidate: state changed since the search")]
    StaleCandidate,

    #[error("word {0} already included in the window")]
    WordAlreadyIncluded(u32),

    #[error("inconsistent probabilities: zero marginal with nonzero joint for ({0}, {1})")]
    InconsistentMarginals(usize, usize),

    #[error("clustering does not cover the dataset vocabulary (expected {expected} words, got {got})")]
    ClusteringMismatch { expected: usize, got: usize },

    #[error("word out of vocabulary: {0:?}")]
    OutOfVocabulary(String),

    #[error("no in-vocabulary bigrams")]
    NoScorableBigrams,

    #[error("dataset file corrupt in {section} section: {detail}")]
    DatasetFormat { section: &'static str, detail: String },

    #[error("unsupported dataset format version {0}")]
    VersionMismatch(u32),

    #[error("model file corrupt at line {line}: {detail}")]
    ModelFormat { line: usize, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
