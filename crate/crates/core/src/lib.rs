//! Word clustering over corpus bigram statistics, plus the class-based
//! bigram language models derived from the clusterings.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`corpus`] — tokenize text, build the vocabulary and bigram table,
//!    persist the whole dataset to a file.
//! 2. [`infotheory`] / [`window`] — the cluster probability model, mutual
//!    information bookkeeping and the merge-window search engine.
//! 3. [`algorithms`] — the clustering drivers: `BROWN`, `BROWN_NW`,
//!    `ALLSAME` and `RESORT`.
//! 4. [`langmodel`] — train a class-based bigram model from a clustering
//!    and evaluate perplexity (without the Nth root) and class prediction
//!    accuracy on a test stream.

pub mod algorithms;
pub mod corpus;
pub mod error;
pub mod infotheory;
pub mod langmodel;
pub mod window;

pub use algorithms::{Algorithm, ClusteringResult, ProgressionLog, ProgressionRecord};
pub use corpus::{BigramTable, Dataset, TokenStream, Vocabulary, WordId};
pub use error::Error;
pub use infotheory::{ClusterId, ClusterSet, MergeCandidate};
pub use langmodel::{ClassLanguageModel, EvalReport};
pub use window::WindowState;

pub type Result<T> = std::result::Result<T, Error>;
