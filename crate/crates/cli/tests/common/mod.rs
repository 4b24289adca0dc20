#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgrag_core::generation::{ChatRequest, ChatResponse, LlmClient, LlmError, KNOWLEDGE_MARKER, QUESTION_MARKER, SUMMARY_INSTRUCTION};
use kgrag_core::text::terms;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

pub fn kgrag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgrag"))
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .output()
        .expect("binary runs")
}

/// Run and require success; returns stdout.
pub fn kgrag_ok(args: &[&str]) -> String {
    let out = kgrag(args);
    assert!(
        out.status.success(),
        "kgrag {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub struct Built {
    pub dir: tempfile::TempDir,
}

impl Built {
    pub fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

/// The five build commands over the bundled corpus.
pub fn build_pipeline() -> Built {
    let dir = tempfile::tempdir().unwrap();
    let built = Built { dir };
    let config = fixture("run.json").display().to_string();
    let corpus = fixture("corpus").display().to_string();
    let gaz = fixture("gazetteer.tsv").display().to_string();
    let pat = fixture("patterns.tsv").display().to_string();
    let (chunks, kg, emb, index) = (built.path("chunks.jsonl"), built.path("kg.jsonl"), built.path("emb.jsonl"), built.path("index.jsonl"));
    kgrag_ok(&["ingest", "--config", &config, "--root", &corpus, "--include", "**/*.md", "--include", "**/*.txt", "--format", "markdown", "--out", &chunks]);
    kgrag_ok(&["build-kg", "--config", &config, "--chunks", &chunks, "--gazetteer", &gaz, "--patterns", &pat, "--out", &kg]);
    kgrag_ok(&["train-embeddings", "--config", &config, "--kg", &kg, "--out", &emb]);
    kgrag_ok(&["build-index", "--config", &config, "--chunks", &chunks, "--kg", &kg, "--out", &index]);
    built
}

/// Stand-in model used to record the mock fixtures.
///
/// For a multiple-choice prompt it picks the option whose text shares the
/// most knowledge sentences with the question's terms, defaulting to the
/// first option. For a summary prompt it returns the first two sentences of
/// the document plus the first sentence of the top knowledge block.
pub struct ScriptedModel;

fn knowledge_section(prompt: &str) -> &str {
    match (prompt.find(KNOWLEDGE_MARKER), prompt.rfind(QUESTION_MARKER)) {
        (Some(a), Some(b)) if a < b => &prompt[a..b],
        _ => "",
    }
}

fn sentences(text: &str) -> Vec<String> {
    text.split(['.', '\n']).map(|s| s.trim().to_string()).filter(|s| !s.is_empty() && !s.starts_with("###")).collect()
}

fn contains_phrase(sentence: &str, phrase: &str) -> bool {
    let s = terms(sentence);
    let p = terms(phrase);
    !p.is_empty() && s.windows(p.len()).any(|w| w == p.as_slice())
}

impl ScriptedModel {
    fn mcq(&self, prompt: &str) -> String {
        let question_part = &prompt[prompt.rfind(QUESTION_MARKER).unwrap_or(0)..];
        let (stem, opts) = question_part.split_once("\n\nOptions:\n").unwrap_or((question_part, ""));
        let stem_terms: Vec<String> = terms(stem).into_iter().filter(|t| t.len() >= 3).collect();
        let knowledge = sentences(knowledge_section(prompt));
        let mut best: Option<(usize, &str)> = None;
        for line in opts.lines() {
            let Some((label, text)) = line.split_once(". ") else { continue };
            if label.len() != 1 {
                continue;
            }
            let score: usize = knowledge
                .iter()
                .filter(|s| contains_phrase(s, text))
                .map(|s| {
                    let st = terms(s);
                    stem_terms.iter().filter(|t| st.contains(t) && !terms(text).contains(t)).count()
                })
                .sum();
            if score > 0 && best.map_or(true, |(b, _)| score > b) {
                best = Some((score, label));
            }
        }
        best.map(|(_, l)| l).unwrap_or("A").to_string()
    }

    fn summary(&self, prompt: &str) -> String {
        let doc = prompt.split_once(SUMMARY_INSTRUCTION).map(|(_, d)| d).unwrap_or("");
        let mut parts: Vec<String> = sentences(doc).into_iter().filter(|s| !s.starts_with('#')).take(2).collect();
        if let Some(first) = sentences(knowledge_section(prompt)).into_iter().next() {
            parts.push(first);
        }
        parts.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")
    }
}

impl LlmClient for ScriptedModel {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let text = if request.user.contains(SUMMARY_INSTRUCTION) { self.summary(&request.user) } else { self.mcq(&request.user) };
        Ok(ChatResponse { text, usage: None })
    }
}
