//! Prompt assembly under an approximate token budget.
//!
//! Layout of a rendered prompt:
//!
//! ```text
//! <HEADER>
//!
//! ### Knowledge [1] (document_chunk)
//! <snippet text>
//!
//! ### Knowledge [2] (kg_triples)
//! <snippet text>
//!
//! ### Question
//! <query>
//! ```
//!
//! With zero snippets no knowledge block is emitted, so the prompt is just
//! the header followed by the question section.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::{ScoredSnippet, SnippetSource};
use crate::text::approx_tokens;

pub const HEADER: &str = "You are an expert in telecommunications standards and protocols. \
Use any knowledge sections below that are relevant, and answer the question.";

pub const KNOWLEDGE_MARKER: &str = "### Knowledge";
pub const QUESTION_MARKER: &str = "### Question";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("token budget {budget} is below the {needed} tokens of the bare prompt")]
    BudgetTooSmall { needed: usize, budget: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBlock {
    pub id: String,
    pub source: SnippetSource,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledInput {
    pub query: String,
    /// Retained snippets in render order (descending score).
    pub snippets: Vec<PromptBlock>,
    /// Ids of snippets dropped to fit the budget, lowest-scored last.
    pub dropped: Vec<String>,
    pub rendered: String,
    pub token_budget: usize,
}

impl AssembledInput {
    pub fn snippet_ids(&self) -> Vec<String> {
        self.snippets.iter().map(|b| b.id.clone()).collect()
    }

    pub fn approx_tokens(&self) -> usize {
        approx_tokens(&self.rendered)
    }
}

fn render(query: &str, blocks: &[PromptBlock]) -> String {
    let mut out = String::with_capacity(HEADER.len() + query.len() + 64);
    out.push_str(HEADER);
    out.push_str("\n\n");
    for (i, b) in blocks.iter().enumerate() {
        out.push_str(&format!("{KNOWLEDGE_MARKER} [{}] ({})\n{}\n\n", i + 1, b.source.as_str(), b.text.trim()));
    }
    out.push_str(QUESTION_MARKER);
    out.push('\n');
    out.push_str(query);
    out
}

/// Render `query` with as many of `snippets` as fit in `budget` tokens.
///
/// Snippets are ordered by descending score (ties by id). If the full set does
/// not fit, the lowest-scored snippets are dropped whole until it does.
pub fn format_input(query: &str, snippets: &[ScoredSnippet], budget: usize) -> Result<AssembledInput, PromptError> {
    if query.trim().is_empty() {
        return Err(PromptError::EmptyQuery);
    }
    let bare = approx_tokens(&render(query, &[]));
    if bare > budget {
        return Err(PromptError::BudgetTooSmall { needed: bare, budget });
    }

    let mut ordered: Vec<&ScoredSnippet> = snippets.iter().collect();
    ordered.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.snippet.id.cmp(&b.snippet.id)));
    let mut blocks: Vec<PromptBlock> = ordered
        .iter()
        .map(|s| PromptBlock {
            id: s.snippet.id.clone(),
            source: s.snippet.source,
            text: s.snippet.text.clone(),
            score: s.score,
        })
        .collect();

    let mut dropped = Vec::new();
    let rendered = loop {
        let r = render(query, &blocks);
        if approx_tokens(&r) <= budget {
            break r;
        }
        // the bare prompt fits, so this terminates before blocks runs out
        let b = blocks.pop().expect("bare prompt fits the budget");
        dropped.push(b.id);
    };
    dropped.reverse();

    Ok(AssembledInput { query: query.to_string(), snippets: blocks, dropped, rendered, token_budget: budget })
}
