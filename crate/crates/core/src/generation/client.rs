//! Chat-model client abstraction and the fixture-replay mock.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    /// Transport failure after retries, or no fixture in strict replay.
    #[error("llm unavailable: {0}")]
    Unavailable(String),
    /// The endpoint rejected the request (4xx other than 429).
    #[error("llm refused request (HTTP {status}): {message}")]
    Refused { status: u16, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub usage: Option<Usage>,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<C: LlmClient + ?Sized> LlmClient for &C {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<C: LlmClient + ?Sized> LlmClient for std::sync::Arc<C> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

/// Hex SHA-256 of the rendered user prompt; the mock fixture key.
pub fn prompt_hash(user_prompt: &str) -> String {
    format!("{:x}", Sha256::digest(user_prompt.as_bytes()))
}

pub fn fixture_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}.txt"))
}

#[derive(Debug, Clone)]
enum FixtureSource {
    Dir(PathBuf),
    Map(BTreeMap<String, String>),
}

/// Replays recorded responses keyed by [`prompt_hash`] of the user prompt.
///
/// In strict mode a missing fixture is an [`LlmError::Unavailable`] naming the
/// hash; otherwise the fallback text is returned.
#[derive(Debug, Clone)]
pub struct MockClient {
    source: FixtureSource,
    fallback: Option<String>,
}

impl MockClient {
    /// Strict replay from `<dir>/<hash>.txt` files.
    pub fn from_dir(dir: impl Into<PathBuf>) -> Self {
        Self { source: FixtureSource::Dir(dir.into()), fallback: None }
    }

    /// Strict replay from an in-memory prompt → response map.
    pub fn from_prompts<I, P, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (P, R)>,
        P: AsRef<str>,
        R: Into<String>,
    {
        let map = pairs.into_iter().map(|(p, r)| (prompt_hash(p.as_ref()), r.into())).collect();
        Self { source: FixtureSource::Map(map), fallback: None }
    }

    pub fn with_fallback(mut self, text: impl Into<String>) -> Self {
        self.fallback = Some(text.into());
        self
    }

    pub fn is_strict(&self) -> bool {
        self.fallback.is_none()
    }
}

impl LlmClient for MockClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let hash = prompt_hash(&request.user);
        let found = match &self.source {
            FixtureSource::Dir(dir) => match fs::read_to_string(fixture_path(dir, &hash)) {
                Ok(text) => Some(text),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
                Err(e) => return Err(LlmError::Unavailable(format!("fixture {hash}: {e}"))),
            },
            FixtureSource::Map(map) => map.get(&hash).cloned(),
        };
        match found.or_else(|| self.fallback.clone()) {
            Some(text) => Ok(ChatResponse { text, usage: None }),
            None => Err(LlmError::Unavailable(format!("no fixture for prompt hash {hash}"))),
        }
    }
}

/// Wraps a client and writes every response as a fixture for [`MockClient`].
pub struct RecordingClient<C> {
    inner: C,
    dir: PathBuf,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { inner, dir })
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let response = self.inner.complete(request)?;
        let hash = prompt_hash(&request.user);
        let write = || -> std::io::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(response.text.as_bytes())?;
            tmp.persist(fixture_path(&self.dir, &hash)).map_err(|e| e.error)?;
            Ok(())
        };
        write().map_err(|e| LlmError::Unavailable(format!("recording fixture {hash}: {e}")))?;
        Ok(response)
    }
}
