use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] kgrag_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
        }
    }

    /// `error: <kind>: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error: {}: {msg}", self.kind())
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(
    kgrag_core::kg::KgError,
    kgrag_core::extraction::ExtractionError,
    kgrag_core::embedding::EmbeddingError,
    kgrag_core::retrieval::RetrievalError,
    kgrag_core::generation::GenerationError,
    kgrag_core::generation::LlmError,
    kgrag_core::evaluation::EvalError,
    kgrag_core::persistence::PersistenceError
);

pub type Result<T> = std::result::Result<T, CliError>;
