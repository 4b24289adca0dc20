//! Knowledge-graph-augmented retrieval and generation over telecom documents.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`persistence::load_corpus`] reads documents and
//!    [`extraction::chunk_document`] splits them into overlapping chunks.
//! 2. An [`extraction::Extractor`] pulls entities and relations out of each
//!    chunk and [`extraction::merge_into_graph`] folds them into a
//!    [`kg::KnowledgeGraph`].
//! 3. [`embedding::train`] fits TransE vectors for link prediction.
//! 4. [`retrieval::build_index`] indexes chunks; a [`retrieval::Retriever`]
//!    ranks chunks and linearized graph neighborhoods with a hybrid score.
//! 5. [`generation`] assembles prompts and calls a chat model in one of three
//!    modes, and [`evaluation`] scores the answers.

pub mod embedding;
pub mod evaluation;
pub mod extraction;
pub mod generation;
pub mod kg;
pub mod persistence;
pub mod retrieval;
pub mod text;

use thiserror::Error;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] kg::KgError),
    #[error(transparent)]
    Extraction(#[from] extraction::ExtractionError),
    #[error(transparent)]
    Embedding(#[from] embedding::EmbeddingError),
    #[error(transparent)]
    Retrieval(#[from] retrieval::RetrievalError),
    #[error(transparent)]
    Generation(#[from] generation::GenerationError),
    #[error(transparent)]
    Llm(#[from] generation::LlmError),
    #[error(transparent)]
    Evaluation(#[from] evaluation::EvalError),
    #[error(transparent)]
    Persistence(#[from] persistence::PersistenceError),
}

impl Error {
    /// Short machine-readable error class, e.g. `llm-unavailable`.
    pub fn kind(&self) -> &'static str {
        use generation::{GenerationError as G, LlmError as L};
        match self {
            Error::Graph(_) => "kg",
            Error::Extraction(_) => "extraction",
            Error::Embedding(_) => "embedding",
            Error::Retrieval(_) => "retrieval",
            Error::Llm(L::Unavailable(_)) | Error::Generation(G::Llm(L::Unavailable(_))) => "llm-unavailable",
            Error::Llm(L::Refused { .. }) | Error::Generation(G::Llm(L::Refused { .. })) => "llm-refused",
            Error::Generation(G::Prompt(_)) => "prompt",
            Error::Generation(G::Retrieval(_)) => "retrieval",
            Error::Generation(_) => "generation",
            Error::Evaluation(_) => "evaluation",
            Error::Persistence(persistence::PersistenceError::VersionMismatch { .. }) => "version-mismatch",
            Error::Persistence(persistence::PersistenceError::Corrupt { .. }) => "corrupt-snapshot",
            Error::Persistence(persistence::PersistenceError::Dataset { .. }) => "dataset",
            Error::Persistence(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
