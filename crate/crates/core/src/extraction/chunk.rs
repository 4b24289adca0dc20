//! Character-based chunking with boundary snapping.

use serde::{Deserialize, Serialize};

use super::{Document, ExtractionError};

pub const MIN_MAX_CHARS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub max_chars: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { max_chars: 1200, overlap: 150 }
    }
}

impl ChunkConfig {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        if self.max_chars < MIN_MAX_CHARS || self.overlap >= self.max_chars {
            return Err(ExtractionError::InvalidChunkConfig {
                max_chars: self.max_chars,
                overlap: self.overlap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    /// `[start, end)` in characters (Unicode scalar values) of the document text.
    pub char_span: (usize, usize),
}

impl Chunk {
    pub fn chunk_ref(&self) -> ChunkRef {
        ChunkRef { doc_id: self.doc_id.clone(), index: self.index }
    }

    /// Stable snippet id for this chunk.
    pub fn snippet_id(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkRef {
    pub doc_id: String,
    pub index: usize,
}

/// Split a document into chunks of at most `max_chars` characters.
///
/// Consecutive chunks share exactly `overlap` characters. Each cut is snapped
/// backwards, within `max_chars / 8` of the hard limit, to the nearest
/// paragraph break, else sentence end, else whitespace.
pub fn chunk_document(doc: &Document, config: ChunkConfig) -> Result<Vec<Chunk>, ExtractionError> {
    config.validate()?;
    let chars: Vec<char> = doc.text.chars().collect();
    let n = chars.len();
    let make = |index: usize, start: usize, end: usize| Chunk {
        doc_id: doc.id.clone(),
        index,
        text: chars[start..end].iter().collect(),
        char_span: (start, end),
    };

    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let hard_end = (start + config.max_chars).min(n);
        if hard_end == n {
            chunks.push(make(chunks.len(), start, n));
            break;
        }
        // the cut must leave room for progress after stepping back by `overlap`
        let lo = hard_end
            .saturating_sub(config.max_chars / 8)
            .max(start + config.overlap + 1);
        let end = snap(&chars, lo, hard_end);
        chunks.push(make(chunks.len(), start, end));
        start = end - config.overlap;
    }
    Ok(chunks)
}

/// Pick a cut in `[lo, hi]`: latest paragraph break, then sentence end, then whitespace.
fn snap(chars: &[char], lo: usize, hi: usize) -> usize {
    let is_para = |i: usize| i >= 2 && chars[i - 1] == '\n' && chars[i - 2] == '\n';
    let is_sentence = |i: usize| {
        i >= 2 && chars[i - 1].is_whitespace() && matches!(chars[i - 2], '.' | '!' | '?')
    };
    let is_space = |i: usize| i >= 1 && chars[i - 1].is_whitespace();

    for pred in [&is_para as &dyn Fn(usize) -> bool, &is_sentence, &is_space] {
        if let Some(i) = (lo..=hi).rev().find(|&i| pred(i)) {
            return i;
        }
    }
    hi
}

/// Concatenate chunks dropping the `overlap` prefix of every chunk but the first.
pub fn reconstruct(chunks: &[Chunk], overlap: usize) -> String {
    let mut out = String::new();
    for (i, c) in chunks.iter().enumerate() {
        if i == 0 {
            out.push_str(&c.text);
        } else {
            out.extend(c.text.chars().skip(overlap));
        }
    }
    out
}
