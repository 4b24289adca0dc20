use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, PersistenceError};
use crate::embedding::TrainConfig;
use crate::extraction::ChunkConfig;
use crate::generation::{EndpointConfig, GenerationConfig};
use crate::retrieval::{HashedEncoder, DEFAULT_ENCODER_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderConfig {
    Hashed { dim: usize },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Hashed { dim: DEFAULT_ENCODER_DIM }
    }
}

impl EncoderConfig {
    pub fn build(&self) -> Result<HashedEncoder, crate::retrieval::RetrievalError> {
        match *self {
            EncoderConfig::Hashed { dim } => HashedEncoder::new(dim),
        }
    }
}

/// Every knob of a run. API keys are never stored here; the endpoint names
/// the environment variable to read instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub chunking: ChunkConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub generation: GenerationConfig,
    pub endpoint: EndpointConfig,
    /// Concurrent model calls during extraction and evaluation.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chunking: ChunkConfig::default(),
            encoder: EncoderConfig::default(),
            train: TrainConfig::default(),
            generation: GenerationConfig::default(),
            endpoint: EndpointConfig::default(),
            parallelism: crate::evaluation::DEFAULT_PARALLELISM,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PersistenceError> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistenceError> {
        write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        let mut cfg = RunConfig::default();
        cfg.train.seed = 1234;
        cfg.generation.weights.tfidf = 0.125;
        cfg.save(&p).unwrap();
        assert_eq!(RunConfig::load(&p).unwrap(), cfg);

        std::fs::write(&p, r#"{"train": {"dim": 8}}"#).unwrap();
        let partial = RunConfig::load(&p).unwrap();
        assert_eq!(partial.train.dim, 8);
        assert_eq!(partial.generation, GenerationConfig::default());
        assert!(!std::fs::read_to_string(dir.path().join("run.json")).unwrap().contains("sk-"));
    }
}
