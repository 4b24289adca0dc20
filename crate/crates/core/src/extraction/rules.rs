//! Gazetteer + regex pattern extractor. Pure and deterministic.
//!
//! Gazetteer file: one `surface<TAB>type` per line.
//! Pattern file: one `label<TAB>regex` per line, where the regex has exactly
//! two capture groups (head, tail). The placeholder `<E>` expands to a capture
//! group matching any gazetteer surface, so `<E>.*?sits below.*?<E>` is a
//! valid pattern. Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeSet, HashMap};

use regex::Regex;

use super::{Chunk, ExtractedEntity, ExtractedRelation, Extraction, ExtractionError, Extractor};

pub const ENTITY_PLACEHOLDER: &str = "<E>";

#[derive(Debug, Clone)]
pub struct RuleBasedExtractor {
    /// Surface → type, first listing wins.
    types: HashMap<String, String>,
    entity_re: Option<Regex>,
    patterns: Vec<(String, Regex)>,
}

fn data_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub fn parse_gazetteer(src: &str) -> Result<Vec<(String, String)>, ExtractionError> {
    data_lines(src)
        .map(|(line, l)| {
            let (surface, ty) = l.split_once('\t').ok_or_else(|| ExtractionError::RuleFile {
                what: "gazetteer",
                line,
                message: "expected surface<TAB>type".into(),
            })?;
            let (surface, ty) = (surface.trim(), ty.trim());
            if surface.is_empty() || ty.is_empty() {
                return Err(ExtractionError::RuleFile {
                    what: "gazetteer",
                    line,
                    message: "empty surface or type".into(),
                });
            }
            Ok((surface.to_string(), ty.to_string()))
        })
        .collect()
}

pub fn parse_patterns(src: &str) -> Result<Vec<(String, String)>, ExtractionError> {
    data_lines(src)
        .map(|(line, l)| {
            let (label, re) = l.split_once('\t').ok_or_else(|| ExtractionError::RuleFile {
                what: "pattern",
                line,
                message: "expected label<TAB>regex".into(),
            })?;
            if label.trim().is_empty() {
                return Err(ExtractionError::RuleFile { what: "pattern", line, message: "empty label".into() });
            }
            Ok((label.trim().to_string(), re.to_string()))
        })
        .collect()
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn surface_regex(surface: &str) -> String {
    let mut s = String::new();
    if surface.chars().next().is_some_and(is_word) {
        s.push_str(r"\b");
    }
    s.push_str(&regex::escape(surface));
    if surface.chars().last().is_some_and(is_word) {
        s.push_str(r"\b");
    }
    s
}

impl RuleBasedExtractor {
    pub fn new(
        gazetteer: Vec<(String, String)>,
        patterns: Vec<(String, String)>,
    ) -> Result<Self, ExtractionError> {
        let mut types = HashMap::new();
        let mut surfaces = Vec::new();
        for (surface, ty) in gazetteer {
            if !types.contains_key(&surface) {
                types.insert(surface.clone(), ty);
                surfaces.push(surface);
            }
        }
        // longest first so that alternation prefers "5G NR" over "NR"
        surfaces.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
        let alternation = surfaces.iter().map(|s| surface_regex(s)).collect::<Vec<_>>().join("|");
        let entity_re = if surfaces.is_empty() {
            None
        } else {
            Some(Regex::new(&format!("(?:{alternation})")).map_err(|e| ExtractionError::RuleFile {
                what: "gazetteer",
                line: 0,
                message: e.to_string(),
            })?)
        };

        let mut compiled = Vec::new();
        for (i, (label, src)) in patterns.into_iter().enumerate() {
            let expanded = src.replace(ENTITY_PLACEHOLDER, &format!("((?:{alternation}))"));
            let re = Regex::new(&expanded).map_err(|e| ExtractionError::RuleFile {
                what: "pattern",
                line: i + 1,
                message: e.to_string(),
            })?;
            if re.captures_len() != 3 {
                return Err(ExtractionError::RuleFile {
                    what: "pattern",
                    line: i + 1,
                    message: format!("expected 2 capture groups, found {}", re.captures_len() - 1),
                });
            }
            compiled.push((label, re));
        }
        Ok(Self { types, entity_re, patterns: compiled })
    }

    pub fn from_files(gazetteer_src: &str, patterns_src: &str) -> Result<Self, ExtractionError> {
        Self::new(parse_gazetteer(gazetteer_src)?, parse_patterns(patterns_src)?)
    }

    fn resolve_surface<'a>(&self, found: &BTreeSet<&'a str>, captured: &str) -> Option<&'a str> {
        let c = captured.trim();
        found
            .get(c)
            .or_else(|| found.get(c.trim_end_matches(['.', ',', ';', ':'])))
            .copied()
    }
}

/// Byte spans of sentences: split after `.`/`!`/`?` followed by whitespace, and at newlines.
pub(super) fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut prev_terminal = false;
    for (i, c) in text.char_indices() {
        let boundary = c == '\n' || (prev_terminal && c.is_whitespace());
        if boundary {
            if !text[start..i].trim().is_empty() {
                spans.push((start, i));
            }
            start = i + c.len_utf8();
        }
        prev_terminal = matches!(c, '.' | '!' | '?');
    }
    if !text[start..].trim().is_empty() {
        spans.push((start, text.len()));
    }
    spans
}

impl Extractor for RuleBasedExtractor {
    fn extract_chunk(&self, chunk: &Chunk) -> Result<Extraction, ExtractionError> {
        let Some(entity_re) = &self.entity_re else {
            return Ok(Extraction::default());
        };
        let text = chunk.text.as_str();
        let sentences = sentence_spans(text);
        let sentence_of = |pos: usize| {
            sentences
                .iter()
                .find(|(s, e)| *s <= pos && pos < *e)
                .map_or("", |(s, e)| text[*s..*e].trim())
        };

        let mut entities = Vec::new();
        let mut found: BTreeSet<&str> = BTreeSet::new();
        for m in entity_re.find_iter(text) {
            let (surface, ty) = self.types.get_key_value(m.as_str()).expect("match is a gazetteer surface");
            if found.insert(surface.as_str()) {
                entities.push(ExtractedEntity {
                    surface: surface.clone(),
                    entity_type: ty.clone(),
                    context: sentence_of(m.start()).to_string(),
                    chunk_ref: chunk.chunk_ref(),
                    verified: true,
                });
            }
        }

        let mut seen = BTreeSet::new();
        let mut relations = Vec::new();
        for &(s, e) in &sentences {
            let sentence = &text[s..e];
            for (label, re) in &self.patterns {
                for caps in re.captures_iter(sentence) {
                    let head = caps.get(1).and_then(|m| self.resolve_surface(&found, m.as_str()));
                    let tail = caps.get(2).and_then(|m| self.resolve_surface(&found, m.as_str()));
                    if let (Some(h), Some(t)) = (head, tail) {
                        if h != t && seen.insert((h, label.as_str(), t)) {
                            relations.push(ExtractedRelation {
                                head_surface: h.to_string(),
                                tail_surface: t.to_string(),
                                label: label.clone(),
                                chunk_ref: chunk.chunk_ref(),
                            });
                        }
                    }
                }
            }
        }
        Ok(Extraction { entities, relations })
    }
}
