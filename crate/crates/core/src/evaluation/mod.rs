//! ROUGE, QA accuracy, and batch evaluation reports.

mod rouge;
mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::Document;
use crate::generation::{answer_mcq, summarize, Deps, GenerationConfig, McqOption, Mode};

pub use rouge::{lcs_len, rouge, RougeVariant};
pub use tables::{render_accuracy_table, render_difficulty_table, render_summarization_table};

pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("reference has {tokens} token(s), need at least {needed}")]
    ReferenceTooShort { tokens: usize, needed: usize },
    #[error("length mismatch: {predictions} predictions vs {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("invalid item {id:?}: {message}")]
    InvalidItem { id: String, message: String },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("unknown difficulty {0:?}")]
    UnknownDifficulty(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Intermediate,
    Hard,
    #[default]
    Unspecified,
}

impl Difficulty {
    pub const LEVELS: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Intermediate, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Intermediate => "intermediate",
            Difficulty::Hard => "hard",
            Difficulty::Unspecified => "unspecified",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts the canonical names plus the alias `medium` → intermediate.
impl FromStr for Difficulty {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "intermediate" | "medium" => Ok(Difficulty::Intermediate),
            "hard" => Ok(Difficulty::Hard),
            "" | "unspecified" => Ok(Difficulty::Unspecified),
            _ => Err(EvalError::UnknownDifficulty(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqItem {
    pub id: String,
    pub question: String,
    pub options: Vec<McqOption>,
    /// Label of the correct option.
    pub gold: String,
    #[serde(default)]
    pub difficulty: Difficulty,
}

impl McqItem {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidItem { id: self.id.clone(), message: m });
        if self.id.trim().is_empty() {
            return bad("empty id".into());
        }
        if self.question.trim().is_empty() {
            return bad("empty question".into());
        }
        if self.options.len() < 2 {
            return bad(format!("{} option(s), need at least 2", self.options.len()));
        }
        let labels: BTreeSet<String> = self.options.iter().map(|o| o.label.trim().to_lowercase()).collect();
        if labels.len() != self.options.len() {
            return bad("option labels are not distinct".into());
        }
        if !labels.contains(&self.gold.trim().to_lowercase()) {
            return bad(format!("answer {:?} is not an option label", self.gold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizationExample {
    pub id: String,
    pub document: Document,
    pub reference: String,
}

impl SummarizationExample {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.reference.trim().is_empty() {
            return Err(EvalError::InvalidItem { id: self.id.clone(), message: "empty reference".into() });
        }
        Ok(())
    }
}

/// Fraction of positions where the prediction is present and equals gold
/// (labels compared case-insensitively).
pub fn accuracy(predictions: &[Option<String>], gold: &[String]) -> Result<f64, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), gold: gold.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let correct = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| p.as_deref().is_some_and(|p| p.trim().eq_ignore_ascii_case(g.trim())))
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 when `n` is 1.
    pub std: f64,
    pub n: usize,
}

impl MetricSummary {
    /// `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Qa,
    Summarization,
}

impl FromStr for Task {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qa" | "mcq" => Ok(Task::Qa),
            "summarization" | "summarize" | "sum" => Ok(Task::Summarization),
            _ => Err(EvalError::UnknownMetric(format!("task {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub id: String,
    /// Selected option label (QA) or generated summary (summarization).
    pub prediction: Option<String>,
    /// Gold label (QA) or reference summary.
    pub gold: String,
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    pub retrieved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub mode: Mode,
    pub dataset: String,
    pub metrics: BTreeMap<String, MetricSummary>,
    /// Accuracy per difficulty level (QA only; unspecified items are left out).
    pub breakdown: BTreeMap<Difficulty, MetricSummary>,
    pub per_item: Vec<ItemResult>,
    pub failures: Vec<ItemFailure>,
    pub config: GenerationConfig,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<MetricSummary> {
        self.metrics.get(name).copied()
    }

    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), EvalError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(EvalError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

/// Run `f` over `items` on at most `parallelism` threads, returning results in
/// item order.
fn run_bounded<T: Sync, R: Send>(items: &[T], parallelism: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build().expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

fn split_outcomes<T>(ids: Vec<String>, outcomes: Vec<Result<T, String>>) -> (Vec<T>, Vec<ItemFailure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in ids.into_iter().zip(outcomes) {
        match outcome {
            Ok(r) => ok.push(r),
            Err(error) => failures.push(ItemFailure { id, error }),
        }
    }
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    (ok, failures)
}

/// Answer every item under `config` and aggregate accuracy overall and per
/// difficulty. Items whose generation fails are listed in `failures` and left
/// out of every `n`.
pub fn evaluate_qa(
    dataset: &[McqItem],
    dataset_name: &str,
    config: &GenerationConfig,
    deps: &Deps,
    parallelism: usize,
) -> Result<EvalReport, crate::Error> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset.into());
    }
    config.validate()?;
    check_ids(dataset.iter().map(|i| i.id.as_str()))?;
    for item in dataset {
        item.validate()?;
    }

    let outcomes = run_bounded(dataset, parallelism, |item| {
        let started = Instant::now();
        let res = answer_mcq(&item.question, &item.options, config, deps).map_err(|e| e.to_string());
        log::info!("{}: answered in {:.3}s", item.id, started.elapsed().as_secs_f64());
        res.map(|ans| {
            let correct = ans.selected_option.as_deref().is_some_and(|p| p.eq_ignore_ascii_case(item.gold.trim()));
            ItemResult {
                id: item.id.clone(),
                prediction: ans.selected_option,
                gold: item.gold.clone(),
                scores: BTreeMap::from([("accuracy".to_string(), if correct { 1.0 } else { 0.0 })]),
                difficulty: Some(item.difficulty),
                retrieved: ans.retrieved,
            }
        })
    });
    let (mut per_item, failures) = split_outcomes(dataset.iter().map(|i| i.id.clone()).collect(), outcomes);
    per_item.sort_by(|a, b| a.id.cmp(&b.id));

    let mut metrics = BTreeMap::new();
    let overall: Vec<f64> = per_item.iter().map(|r| r.scores["accuracy"]).collect();
    if let Some(s) = MetricSummary::from_values(&overall) {
        metrics.insert("accuracy".to_string(), s);
    }
    let mut breakdown = BTreeMap::new();
    for level in Difficulty::LEVELS {
        let vals: Vec<f64> = per_item.iter().filter(|r| r.difficulty == Some(level)).map(|r| r.scores["accuracy"]).collect();
        if let Some(s) = MetricSummary::from_values(&vals) {
            breakdown.insert(level, s);
        }
    }
    Ok(EvalReport {
        task: Task::Qa,
        mode: config.mode,
        dataset: dataset_name.to_string(),
        metrics,
        breakdown,
        per_item,
        failures,
        config: config.clone(),
    })
}

/// Summarize every document and report mean ± sample std of each ROUGE
/// variant. A variant the reference is too short for is omitted for that item.
pub fn evaluate_summarization(
    dataset: &[SummarizationExample],
    dataset_name: &str,
    config: &GenerationConfig,
    deps: &Deps,
    parallelism: usize,
) -> Result<EvalReport, crate::Error> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset.into());
    }
    config.validate()?;
    check_ids(dataset.iter().map(|i| i.id.as_str()))?;
    for ex in dataset {
        ex.validate()?;
    }

    let outcomes = run_bounded(dataset, parallelism, |ex| {
        let started = Instant::now();
        let res = summarize(&ex.document, config, deps).map_err(|e| e.to_string());
        log::info!("{}: summarized in {:.3}s", ex.id, started.elapsed().as_secs_f64());
        res.map(|ans| {
            let scores = RougeVariant::ALL
                .iter()
                .filter_map(|&v| rouge(&ans.raw_text, &ex.reference, v).ok().map(|s| (v.key().to_string(), s)))
                .collect();
            ItemResult {
                id: ex.id.clone(),
                prediction: Some(ans.raw_text),
                gold: ex.reference.clone(),
                scores,
                difficulty: None,
                retrieved: ans.retrieved,
            }
        })
    });
    let (mut per_item, failures) = split_outcomes(dataset.iter().map(|e| e.id.clone()).collect(), outcomes);
    per_item.sort_by(|a, b| a.id.cmp(&b.id));

    let mut metrics = BTreeMap::new();
    for v in RougeVariant::ALL {
        let vals: Vec<f64> = per_item.iter().filter_map(|r| r.scores.get(v.key()).copied()).collect();
        if let Some(s) = MetricSummary::from_values(&vals) {
            metrics.insert(v.key().to_string(), s);
        }
    }
    Ok(EvalReport {
        task: Task::Summarization,
        mode: config.mode,
        dataset: dataset_name.to_string(),
        metrics,
        breakdown: BTreeMap::new(),
        per_item,
        failures,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{format_input, mcq_prompt_question, summary_prompt_question, MockClient};
    use crate::kg::KnowledgeGraph;
    use crate::retrieval::{HashedEncoder, VectorIndex};

    fn opts() -> Vec<McqOption> {
        vec![McqOption::new("A", "one"), McqOption::new("B", "two")]
    }

    fn item(id: &str, gold: &str, d: Difficulty) -> McqItem {
        McqItem { id: id.into(), question: format!("question {id}?"), options: opts(), gold: gold.into(), difficulty: d }
    }

    #[test]
    fn accuracy_examples() {
        let gold: Vec<String> = ["A", "B", "C", "D"].map(String::from).to_vec();
        let all: Vec<Option<String>> = gold.iter().cloned().map(Some).collect();
        assert_eq!(accuracy(&all, &gold).unwrap(), 1.0);
        assert_eq!(accuracy(&[None, None, None, None], &gold).unwrap(), 0.0);
        let three = [Some("A".into()), Some("B".into()), Some("x".into()), Some("d".into())];
        assert_eq!(accuracy(&three, &gold).unwrap(), 0.75);
        assert!(matches!(accuracy(&three[..2], &gold), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn summary_statistics() {
        let s = MetricSummary::from_values(&[0.5, 1.0]).unwrap();
        assert_eq!(s.mean, 0.75);
        assert!((s.std - 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(MetricSummary::from_values(&[0.3]).unwrap().std, 0.0);
        assert!(MetricSummary::from_values(&[]).is_none());
    }

    #[test]
    fn difficulty_aliases() {
        assert_eq!("medium".parse::<Difficulty>().unwrap(), Difficulty::Intermediate);
        assert_eq!("Hard".parse::<Difficulty>().unwrap(), Difficulty::Hard);
        assert!("extreme".parse::<Difficulty>().is_err());
    }

    fn qa_run(items: &[McqItem], replies: &[(&str, &str)]) -> EvalReport {
        let g = KnowledgeGraph::new();
        let enc = HashedEncoder::default();
        let idx = VectorIndex::empty(&enc);
        let config = GenerationConfig { mode: Mode::LlmOnly, ..Default::default() };
        let prompts: Vec<(String, String)> = replies
            .iter()
            .map(|(id, reply)| {
                let it = items.iter().find(|i| i.id == *id).unwrap();
                let p = format_input(&mcq_prompt_question(&it.question, &it.options), &[], config.token_budget).unwrap();
                (p.rendered, reply.to_string())
            })
            .collect();
        let client = MockClient::from_prompts(prompts);
        let deps = Deps { graph: &g, index: &idx, encoder: &enc, client: &client };
        evaluate_qa(items, "fixture", &config, &deps, 3).unwrap()
    }

    #[test]
    fn difficulty_breakdown_by_counting() {
        use Difficulty::*;
        let items = vec![
            item("e1", "A", Easy),
            item("e2", "A", Easy),
            item("e3", "B", Easy),
            item("e4", "B", Easy),
            item("h1", "A", Hard),
            item("h2", "B", Hard),
        ];
        let replies = [("e1", "A"), ("e2", "A"), ("e3", "B"), ("e4", "A"), ("h1", "A"), ("h2", "nothing")];
        let r = qa_run(&items, &replies);
        assert!((r.metrics["accuracy"].mean - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.metrics["accuracy"].n, 6);
        assert_eq!(r.breakdown[&Easy].mean, 0.75);
        assert_eq!(r.breakdown[&Hard].mean, 0.5);
        assert!(!r.breakdown.contains_key(&Intermediate));
        let weighted: f64 = r.breakdown.values().map(|s| s.mean * s.n as f64).sum::<f64>() / 6.0;
        assert!((weighted - r.metrics["accuracy"].mean).abs() < 1e-12);
        assert_eq!(r.per_item.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["e1", "e2", "e3", "e4", "h1", "h2"]);
    }

    #[test]
    fn failures_are_excluded_from_n() {
        let items = vec![item("a", "A", Difficulty::Easy), item("b", "B", Difficulty::Unspecified)];
        let r = qa_run(&items, &[("a", "A")]);
        assert_eq!(r.metrics["accuracy"].n, 1);
        assert_eq!(r.metrics["accuracy"].mean, 1.0);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].id, "b");
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn summarization_identity_run() {
        let g = KnowledgeGraph::new();
        let enc = HashedEncoder::default();
        let idx = VectorIndex::empty(&enc);
        let config = GenerationConfig { mode: Mode::Rag, ..Default::default() };
        let doc = Document::new("d1", "The gNB schedules uplink grants for each UE.", "d1.txt", vec![]).unwrap();
        let reference = "gNB schedules uplink grants";
        let prompt = format_input(&summary_prompt_question(&doc, config.max_document_chars), &[], config.token_budget).unwrap();
        let client = MockClient::from_prompts([(prompt.rendered.as_str(), reference)]);
        let deps = Deps { graph: &g, index: &idx, encoder: &enc, client: &client };
        let ds = [SummarizationExample { id: "d1".into(), document: doc, reference: reference.into() }];
        let r = evaluate_summarization(&ds, "fixture", &config, &deps, 1).unwrap();
        for v in RougeVariant::ALL {
            assert_eq!(r.metrics[v.key()], MetricSummary { mean: 1.0, std: 0.0, n: 1 });
        }
    }

    #[test]
    fn item_validation() {
        assert!(item("x", "C", Difficulty::Easy).validate().is_err());
        assert!(item("x", "b", Difficulty::Easy).validate().is_ok());
        let mut one = item("x", "A", Difficulty::Easy);
        one.options.truncate(1);
        assert!(one.validate().is_err());
    }
}
