use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{io_err, PersistenceError};
use crate::evaluation::{Difficulty, McqItem, SummarizationExample};
use crate::extraction::Document;
use crate::generation::McqOption;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct McqLine {
    id: String,
    question: String,
    options: Vec<McqOption>,
    answer: String,
    #[serde(default)]
    difficulty: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryLine {
    id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    document_path: Option<PathBuf>,
    reference: String,
}

/// Non-blank lines with 1-based numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>, PersistenceError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn line_err(path: &Path, line: usize) -> impl Fn(String) -> PersistenceError + '_ {
    move |message| PersistenceError::Dataset { path: path.to_path_buf(), line, message }
}

/// Multiple-choice items, one JSON object per line:
/// `{id, question, options: [{label, text}], answer, difficulty?}`.
///
/// Any invalid line rejects the whole file. Difficulty `medium` is read as
/// `intermediate`.
pub fn load_mcq(path: &Path) -> Result<Vec<McqItem>, PersistenceError> {
    let mut items = Vec::new();
    let mut ids = BTreeSet::new();
    for (line, raw) in data_lines(path)? {
        let err = line_err(path, line);
        let parsed: McqLine = serde_json::from_str(&raw).map_err(|e| err(e.to_string()))?;
        let difficulty = match parsed.difficulty.as_deref() {
            None => Difficulty::Unspecified,
            Some(d) => d.parse().map_err(|e: crate::evaluation::EvalError| err(e.to_string()))?,
        };
        let item = McqItem {
            id: parsed.id,
            question: parsed.question,
            options: parsed.options,
            gold: parsed.answer,
            difficulty,
        };
        item.validate().map_err(|e| err(e.to_string()))?;
        if !ids.insert(item.id.clone()) {
            return Err(err(format!("duplicate id {:?}", item.id)));
        }
        items.push(item);
    }
    Ok(items)
}

/// Summarization examples, one JSON object per line:
/// `{id, text | document_path, reference}`. A relative `document_path` is
/// resolved against the dataset file's directory.
pub fn load_summarization(path: &Path) -> Result<Vec<SummarizationExample>, PersistenceError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (line, raw) in data_lines(path)? {
        let err = line_err(path, line);
        let parsed: SummaryLine = serde_json::from_str(&raw).map_err(|e| err(e.to_string()))?;
        let (text, source) = match (parsed.text, parsed.document_path) {
            (Some(t), None) => (t, format!("{}:{line}", path.display())),
            (None, Some(p)) => {
                let full = if p.is_absolute() { p } else { base.join(p) };
                let t = std::fs::read_to_string(&full).map_err(|e| err(format!("{}: {e}", full.display())))?;
                (t, full.display().to_string())
            }
            _ => return Err(err("exactly one of \"text\" and \"document_path\" is required".into())),
        };
        let document = Document::new(parsed.id.clone(), text, source, vec![]).map_err(|e| err(e.to_string()))?;
        let ex = SummarizationExample { id: parsed.id, document, reference: parsed.reference };
        ex.validate().map_err(|e| err(e.to_string()))?;
        if !ids.insert(ex.id.clone()) {
            return Err(err(format!("duplicate id {:?}", ex.id)));
        }
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const Q1: &str = r#"{"id":"q1","question":"Which layer does ARQ?","options":[{"label":"A","text":"RLC"},{"label":"B","text":"PHY"}],"answer":"A","difficulty":"medium"}"#;
    const Q2: &str = r#"{"id":"q2","question":"Which layer ciphers?","options":[{"label":"A","text":"PDCP"},{"label":"B","text":"MAC"}],"answer":"A"}"#;

    #[test]
    fn mcq_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "q.jsonl", &format!("{Q1}\n\n{Q2}\n"));
        let items = load_mcq(&p).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].difficulty, Difficulty::Intermediate);
        assert_eq!(items[1].difficulty, Difficulty::Unspecified);
    }

    #[test]
    fn mcq_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "q.jsonl", &Q1.replace(r#","answer":"A""#, ""));
        match load_mcq(&p) {
            Err(PersistenceError::Dataset { line: 1, message, .. }) => assert!(message.contains("answer")),
            other => panic!("unexpected {other:?}"),
        }
        let p = write(dir.path(), "q2.jsonl", &format!("{Q1}\n{}", Q2.replace(r#""answer":"A""#, r#""answer":"Z""#)));
        assert!(matches!(load_mcq(&p), Err(PersistenceError::Dataset { line: 2, .. })));
        let p = write(dir.path(), "q3.jsonl", &format!("{Q1}\n{Q1}"));
        assert!(matches!(load_mcq(&p), Err(PersistenceError::Dataset { line: 2, .. })));
    }

    #[test]
    fn summarization_lines() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "doc.txt", "PDCP performs ciphering.");
        let p = write(
            dir.path(),
            "s.jsonl",
            "{\"id\":\"a\",\"text\":\"RLC segments.\",\"reference\":\"RLC segments\"}\n{\"id\":\"b\",\"document_path\":\"doc.txt\",\"reference\":\"PDCP ciphers\"}\n",
        );
        let ex = load_summarization(&p).unwrap();
        assert_eq!(ex[1].document.text, "PDCP performs ciphering.");
        let p = write(dir.path(), "bad.jsonl", "{\"id\":\"a\",\"reference\":\"x\"}");
        assert!(matches!(load_summarization(&p), Err(PersistenceError::Dataset { line: 1, .. })));
    }
}
