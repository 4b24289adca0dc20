//! Prompt assembly, model calls, and the three pipeline modes.
//!
//! * `llm_only`: the question alone.
//! * `rag`: the question plus the top-K indexed document chunks.
//! * `kg_rag`: as `rag`, with linearized KG neighborhoods of the entities
//!   named in the question ranked alongside the chunks.
//!
//! When retrieval yields nothing, `rag` and `kg_rag` render exactly the
//! `llm_only` prompt.

mod client;
mod http;
mod prompt;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{chunk_document, ChunkConfig, Document, ExtractionError};
use crate::kg::KnowledgeGraph;
use crate::retrieval::{Encoder, RetrievalError, Retriever, ScoredSnippet, ScoringWeights, VectorIndex};

pub use client::{fixture_path, prompt_hash, ChatRequest, ChatResponse, LlmClient, LlmError, MockClient, RecordingClient, Usage};
pub use http::{EndpointConfig, HttpClient, DEFAULT_API_KEY_ENV};
pub use prompt::{format_input, AssembledInput, PromptBlock, PromptError, HEADER, KNOWLEDGE_MARKER, QUESTION_MARKER};

pub const SYSTEM_PROMPT: &str = "You are a careful assistant for telecommunications engineering questions.";
pub const MCQ_INSTRUCTION: &str = "Answer with the option letter only.";
pub const SUMMARY_INSTRUCTION: &str = "Write a concise summary of the following technical document.";

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    LlmOnly,
    Rag,
    KgRag,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::LlmOnly, Mode::Rag, Mode::KgRag];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LlmOnly => "llm_only",
            Mode::Rag => "rag",
            Mode::KgRag => "kg_rag",
        }
    }

    /// Row label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Mode::LlmOnly => "LLM-only",
            Mode::Rag => "RAG",
            Mode::KgRag => "KG-RAG",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "llm_only" | "llm" => Ok(Mode::LlmOnly),
            "rag" => Ok(Mode::Rag),
            "kg_rag" => Ok(Mode::KgRag),
            _ => Err(GenerationError::InvalidConfig(format!("unknown mode {s:?} (llm_only, rag, kg_rag)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub mode: Mode,
    pub top_k: usize,
    pub hops: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub weights: ScoringWeights,
    /// Prompt budget in approximate tokens.
    pub token_budget: usize,
    /// Documents longer than this are truncated before summarization.
    pub max_document_chars: usize,
    /// Chunking used to turn a document into retrieval queries.
    pub chunking: ChunkConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            mode: Mode::KgRag,
            top_k: crate::retrieval::DEFAULT_TOP_K,
            hops: crate::retrieval::DEFAULT_HOPS,
            temperature: 0.0,
            max_output_tokens: 512,
            weights: ScoringWeights::default(),
            token_budget: 4096,
            max_document_chars: 12_000,
            chunking: ChunkConfig::default(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::InvalidConfig(m.to_string()));
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a finite non-negative number");
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive");
        }
        if self.token_budget == 0 {
            return bad("token_budget must be positive");
        }
        if self.max_document_chars == 0 {
            return bad("max_document_chars must be positive");
        }
        self.weights.validate()?;
        self.chunking.validate()?;
        Ok(())
    }
}

/// Everything a pipeline call reads.
#[derive(Clone, Copy)]
pub struct Deps<'a> {
    pub graph: &'a KnowledgeGraph,
    pub index: &'a VectorIndex,
    pub encoder: &'a dyn Encoder,
    pub client: &'a dyn LlmClient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqOption {
    pub label: String,
    pub text: String,
}

impl McqOption {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub raw_text: String,
    pub selected_option: Option<String>,
    /// Snippet ids that made it into the prompt.
    pub retrieved: Vec<String>,
    pub mode: Mode,
    pub prompt_hash: String,
}

/// Call the model on a rendered prompt.
pub fn generate(input: &AssembledInput, client: &dyn LlmClient, config: &GenerationConfig) -> Result<String, GenerationError> {
    let request = ChatRequest {
        system: SYSTEM_PROMPT.to_string(),
        user: input.rendered.clone(),
        temperature: config.temperature,
        max_tokens: config.max_output_tokens,
    };
    let response = client.complete(&request)?;
    if let Some(u) = response.usage {
        log::info!("usage: prompt_tokens={} completion_tokens={}", u.prompt_tokens, u.completion_tokens);
    }
    Ok(response.text)
}

/// Candidate snippets for `query` under `config.mode`.
pub fn retrieve(query: &str, config: &GenerationConfig, deps: &Deps) -> Result<Vec<ScoredSnippet>, GenerationError> {
    match config.mode {
        Mode::LlmOnly => Ok(Vec::new()),
        Mode::Rag => {
            let r = Retriever::new(deps.index, deps.encoder, deps.graph)?;
            Ok(r.rank_with_extras(query, Vec::new(), config.top_k, config.weights)?)
        }
        Mode::KgRag => {
            let r = Retriever::new(deps.index, deps.encoder, deps.graph)?;
            Ok(r.for_query(query, config.top_k, config.weights, config.hops)?)
        }
    }
}

/// The question text sent for a multiple-choice item.
pub fn mcq_prompt_question(question: &str, options: &[McqOption]) -> String {
    let mut q = question.trim().to_string();
    q.push_str("\n\nOptions:\n");
    for o in options {
        q.push_str(&format!("{}. {}\n", o.label, o.text.trim()));
    }
    q.push('\n');
    q.push_str(MCQ_INSTRUCTION);
    q
}

fn validate_options(options: &[McqOption]) -> Result<(), GenerationError> {
    if options.len() < 2 {
        return Err(GenerationError::InvalidOptions(format!("need at least 2 options, got {}", options.len())));
    }
    let mut seen = std::collections::BTreeSet::new();
    for o in options {
        let label = o.label.trim().to_lowercase();
        if label.is_empty() || !label.chars().all(char::is_alphanumeric) {
            return Err(GenerationError::InvalidOptions(format!("label {:?} must be alphanumeric", o.label)));
        }
        if !seen.insert(label) {
            return Err(GenerationError::InvalidOptions(format!("duplicate label {:?}", o.label)));
        }
    }
    Ok(())
}

/// Select an option from free model text.
///
/// The first standalone alphanumeric token equal to a label (case-insensitive)
/// wins. Failing that, an option whose text begins the reply is chosen.
/// Returns `None` when neither rule applies.
pub fn parse_option(reply: &str, options: &[McqOption]) -> Option<String> {
    let labels: BTreeMap<String, &McqOption> = options.iter().map(|o| (o.label.trim().to_lowercase(), o)).collect();
    for tok in crate::text::terms(reply) {
        if let Some(o) = labels.get(&tok) {
            return Some(o.label.clone());
        }
    }
    let reply_norm = crate::text::collapse_whitespace(reply).to_lowercase();
    options
        .iter()
        .filter(|o| !o.text.trim().is_empty())
        .filter(|o| reply_norm.starts_with(&crate::text::collapse_whitespace(&o.text).to_lowercase()))
        .max_by_key(|o| o.text.len())
        .map(|o| o.label.clone())
}

/// Answer a multiple-choice question.
pub fn answer_mcq(question: &str, options: &[McqOption], config: &GenerationConfig, deps: &Deps) -> Result<Answer, GenerationError> {
    validate_options(options)?;
    let snippets = retrieve(question, config, deps)?;
    let input = format_input(&mcq_prompt_question(question, options), &snippets, config.token_budget)?;
    let raw_text = generate(&input, deps.client, config)?;
    Ok(Answer {
        selected_option: parse_option(&raw_text, options),
        raw_text,
        retrieved: input.snippet_ids(),
        mode: config.mode,
        prompt_hash: prompt_hash(&input.rendered),
    })
}

/// Answer an open question; `selected_option` is always `None`.
pub fn answer_question(question: &str, config: &GenerationConfig, deps: &Deps) -> Result<Answer, GenerationError> {
    let snippets = retrieve(question, config, deps)?;
    let input = format_input(question, &snippets, config.token_budget)?;
    let raw_text = generate(&input, deps.client, config)?;
    Ok(Answer {
        raw_text,
        selected_option: None,
        retrieved: input.snippet_ids(),
        mode: config.mode,
        prompt_hash: prompt_hash(&input.rendered),
    })
}

/// The question text sent to summarize `doc`.
pub fn summary_prompt_question(doc: &Document, max_chars: usize) -> String {
    let text: String = doc.text.trim().chars().take(max_chars).collect();
    format!("{SUMMARY_INSTRUCTION}\n\n{}", text.trim_end())
}

/// Retrieval for a whole document: each chunk is a query, results are pooled
/// by snippet id keeping the best score, and chunks of `doc` itself are
/// excluded. The best `top_k` survive.
pub fn retrieve_for_document(doc: &Document, config: &GenerationConfig, deps: &Deps) -> Result<Vec<ScoredSnippet>, GenerationError> {
    if config.mode == Mode::LlmOnly {
        return Ok(Vec::new());
    }
    let own_prefix = format!("{}#", doc.id);
    let mut pooled: BTreeMap<String, ScoredSnippet> = BTreeMap::new();
    for chunk in chunk_document(doc, config.chunking)? {
        if chunk.text.trim().is_empty() {
            continue;
        }
        // ask for extra so that own chunks do not crowd out the rest
        let widened = GenerationConfig { top_k: config.top_k * 2 + 1, ..config.clone() };
        for s in retrieve(&chunk.text, &widened, deps)? {
            if s.snippet.id.starts_with(&own_prefix) {
                continue;
            }
            match pooled.get(&s.snippet.id) {
                Some(prev) if prev.score >= s.score => {}
                _ => {
                    pooled.insert(s.snippet.id.clone(), s);
                }
            }
        }
    }
    let mut all: Vec<ScoredSnippet> = pooled.into_values().collect();
    all.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.snippet.id.cmp(&b.snippet.id)));
    all.truncate(config.top_k);
    Ok(all)
}

pub fn summarize(doc: &Document, config: &GenerationConfig, deps: &Deps) -> Result<Answer, GenerationError> {
    if doc.text.trim().is_empty() {
        return Err(ExtractionError::EmptyDocument(doc.id.clone()).into());
    }
    let snippets = retrieve_for_document(doc, config, deps)?;
    let input = format_input(&summary_prompt_question(doc, config.max_document_chars), &snippets, config.token_budget)?;
    let raw_text = generate(&input, deps.client, config)?;
    Ok(Answer {
        raw_text,
        selected_option: None,
        retrieved: input.snippet_ids(),
        mode: config.mode,
        prompt_hash: prompt_hash(&input.rendered),
    })
}
