//! Chat-model extractor with a strict JSON reply schema.

use std::collections::BTreeSet;

use serde_json::Value;

use super::rules::sentence_spans;
use super::{Chunk, ExtractedEntity, ExtractedRelation, Extraction, ExtractionError, Extractor};
use crate::generation::{ChatRequest, LlmClient};
use crate::text::normalize_name;

/// `{text}` is replaced by the chunk text.
pub const DEFAULT_EXTRACTION_PROMPT: &str = r#"Extract the named entities and the relations between them from the telecom text below.
Entity types are short lowercase nouns such as protocol, layer, procedure, metric, component, message, technology.
Reply with a single JSON object and nothing else, in exactly this form:
{"entities": [{"surface": "...", "type": "..."}], "relations": [{"head": "...", "tail": "...", "label": "..."}]}
Every relation head and tail must be the surface of one of the listed entities.

Text:
{text}"#;

const REPAIR_SUFFIX: &str = "\n\nYour previous reply was not a valid JSON object. Reply with the JSON object only.";

pub struct LlmExtractor<C> {
    client: C,
    prompt: String,
    max_tokens: u32,
}

impl<C: LlmClient> LlmExtractor<C> {
    pub fn new(client: C) -> Self {
        Self { client, prompt: DEFAULT_EXTRACTION_PROMPT.to_string(), max_tokens: 1024 }
    }

    pub fn with_prompt(mut self, template: impl Into<String>) -> Self {
        self.prompt = template.into();
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn render_prompt(&self, chunk: &Chunk) -> String {
        self.prompt.replace("{text}", &chunk.text)
    }

    fn ask(&self, user: String) -> Result<String, ExtractionError> {
        let req = ChatRequest {
            system: "You extract structured knowledge and reply in JSON.".into(),
            user,
            temperature: 0.0,
            max_tokens: self.max_tokens,
        };
        Ok(self.client.complete(&req)?.text)
    }
}

impl<C: LlmClient> Extractor for LlmExtractor<C> {
    fn extract_chunk(&self, chunk: &Chunk) -> Result<Extraction, ExtractionError> {
        let prompt = self.render_prompt(chunk);
        let reply = self.ask(prompt.clone())?;
        if let Some(ex) = parse_extraction_reply(&reply, chunk) {
            return Ok(ex);
        }
        log::warn!("malformed extraction reply for {}, asking again", chunk.snippet_id());
        let reply = self.ask(format!("{prompt}{REPAIR_SUFFIX}"))?;
        Ok(parse_extraction_reply(&reply, chunk).unwrap_or_else(|| {
            log::warn!("dropping extraction for {}: reply is still not a JSON object", chunk.snippet_id());
            Extraction::default()
        }))
    }
}

/// The outermost `{...}` of a reply.
fn json_object_span(reply: &str) -> Option<&str> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    (start < end).then(|| &reply[start..=end])
}

fn str_field<'a>(item: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| item.get(*k).and_then(Value::as_str)).map(str::trim).filter(|s| !s.is_empty())
}

fn context_of(text: &str, surface: &str) -> String {
    let Some(pos) = text.find(surface) else { return String::new() };
    sentence_spans(text)
        .into_iter()
        .find(|&(s, e)| s <= pos && pos < e)
        .map(|(s, e)| text[s..e].trim().to_string())
        .unwrap_or_default()
}

/// Parse a model reply into an extraction for `chunk`.
///
/// Returns `None` when the reply holds no JSON object at all. Malformed items
/// inside a valid object are dropped with a warning, as are relations whose
/// endpoints are not among the returned entities.
pub fn parse_extraction_reply(reply: &str, chunk: &Chunk) -> Option<Extraction> {
    let cleaned: String = reply.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n");
    let value: Value = serde_json::from_str(json_object_span(&cleaned)?).ok()?;
    let obj = value.as_object()?;
    let id = chunk.snippet_id();

    let mut out = Extraction::default();
    let mut surfaces = BTreeSet::new();
    for item in obj.get("entities").and_then(Value::as_array).map(Vec::as_slice).unwrap_or_default() {
        let (Some(surface), Some(ty)) = (str_field(item, &["surface", "name"]), str_field(item, &["type", "entity_type"])) else {
            log::warn!("{id}: dropping malformed entity {item}");
            continue;
        };
        if !surfaces.insert(normalize_name(surface)) {
            continue;
        }
        out.entities.push(ExtractedEntity {
            surface: surface.to_string(),
            entity_type: ty.to_lowercase(),
            context: context_of(&chunk.text, surface),
            chunk_ref: chunk.chunk_ref(),
            verified: chunk.text.contains(surface),
        });
    }

    let resolve = |s: &str| {
        let key = normalize_name(s);
        out.entities.iter().find(|e| normalize_name(&e.surface) == key).map(|e| e.surface.clone())
    };
    let mut seen = BTreeSet::new();
    let mut relations = Vec::new();
    for item in obj.get("relations").and_then(Value::as_array).map(Vec::as_slice).unwrap_or_default() {
        let (Some(head), Some(tail), Some(label)) = (
            str_field(item, &["head"]),
            str_field(item, &["tail"]),
            str_field(item, &["label", "relation"]),
        ) else {
            log::warn!("{id}: dropping malformed relation {item}");
            continue;
        };
        let (Some(head), Some(tail)) = (resolve(head), resolve(tail)) else {
            log::warn!("{id}: dropping relation with unknown endpoint {item}");
            continue;
        };
        if head == tail || !seen.insert((head.clone(), label.to_string(), tail.clone())) {
            continue;
        }
        relations.push(ExtractedRelation { head_surface: head, tail_surface: tail, label: label.to_string(), chunk_ref: chunk.chunk_ref() });
    }
    out.relations = relations;
    Some(out)
}
