//! Plain-text tables: modes as rows, metrics or datasets as columns.

use std::collections::BTreeSet;

use super::{Difficulty, EvalReport, RougeVariant, Task};
use crate::generation::Mode;

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([header[c].chars().count()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("| {} |", padded.join(" | "))
    };
    let rule = format!("|{}|", widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|"));
    let mut out = vec![line(header), rule];
    out.extend(rows.iter().map(|r| line(r)));
    out.join("\n") + "\n"
}

fn modes_present(reports: &[&EvalReport]) -> Vec<Mode> {
    let present: BTreeSet<Mode> = reports.iter().map(|r| r.mode).collect();
    Mode::ALL.into_iter().filter(|m| present.contains(m)).collect()
}

fn datasets(reports: &[&EvalReport]) -> Vec<String> {
    let mut seen = Vec::new();
    for r in reports {
        if !seen.contains(&r.dataset) {
            seen.push(r.dataset.clone());
        }
    }
    seen
}

/// Summarization results: one row per mode, `mean±std` per ROUGE variant.
/// Uses the last report seen for each mode.
pub fn render_summarization_table(reports: &[EvalReport]) -> String {
    let reports: Vec<&EvalReport> = reports.iter().filter(|r| r.task == Task::Summarization).collect();
    let mut header = vec!["Models".to_string()];
    header.extend(RougeVariant::ALL.iter().map(|v| v.title().to_string()));
    let rows: Vec<Vec<String>> = modes_present(&reports)
        .into_iter()
        .map(|mode| {
            let r = reports.iter().rev().find(|r| r.mode == mode).expect("mode present");
            let mut row = vec![mode.display_name().to_string()];
            row.extend(RougeVariant::ALL.iter().map(|v| match r.metric(v.key()) {
                Some(s) => format!("{:.2}±{:.2}", s.mean, s.std),
                None => "-".to_string(),
            }));
            row
        })
        .collect();
    render(&header, &rows)
}

/// QA accuracy: one row per mode, one column per dataset.
pub fn render_accuracy_table(reports: &[EvalReport]) -> String {
    let reports: Vec<&EvalReport> = reports.iter().filter(|r| r.task == Task::Qa).collect();
    let cols = datasets(&reports);
    let mut header = vec!["Models".to_string()];
    header.extend(cols.iter().cloned());
    let rows: Vec<Vec<String>> = modes_present(&reports)
        .into_iter()
        .map(|mode| {
            let mut row = vec![mode.display_name().to_string()];
            row.extend(cols.iter().map(|d| {
                reports
                    .iter()
                    .rev()
                    .find(|r| r.mode == mode && &r.dataset == d)
                    .and_then(|r| r.metric("accuracy"))
                    .map_or("-".to_string(), |s| format!("{:.2}", s.mean))
            }));
            row
        })
        .collect();
    render(&header, &rows)
}

/// QA accuracy by difficulty on one dataset: one row per mode, one column
/// per level.
pub fn render_difficulty_table(reports: &[EvalReport], dataset: &str) -> String {
    let reports: Vec<&EvalReport> = reports.iter().filter(|r| r.task == Task::Qa && r.dataset == dataset).collect();
    let mut header = vec!["Models".to_string()];
    header.extend(Difficulty::LEVELS.iter().map(|d| {
        let s = d.as_str();
        s[..1].to_uppercase() + &s[1..]
    }));
    let rows: Vec<Vec<String>> = modes_present(&reports)
        .into_iter()
        .map(|mode| {
            let r = reports.iter().rev().find(|r| r.mode == mode).expect("mode present");
            let mut row = vec![mode.display_name().to_string()];
            row.extend(Difficulty::LEVELS.iter().map(|d| r.breakdown.get(d).map_or("-".to_string(), |s| format!("{:.2}", s.mean))));
            row
        })
        .collect();
    render(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::MetricSummary;
    use crate::generation::GenerationConfig;
    use std::collections::BTreeMap;

    fn qa(mode: Mode, dataset: &str, acc: f64) -> EvalReport {
        EvalReport {
            task: Task::Qa,
            mode,
            dataset: dataset.into(),
            metrics: BTreeMap::from([("accuracy".into(), MetricSummary { mean: acc, std: 0.0, n: 10 })]),
            breakdown: BTreeMap::from([(Difficulty::Easy, MetricSummary { mean: acc, std: 0.0, n: 10 })]),
            per_item: vec![],
            failures: vec![],
            config: GenerationConfig { mode, ..Default::default() },
        }
    }

    #[test]
    fn accuracy_grid() {
        let reports = [
            qa(Mode::KgRag, "spec-qa", 0.91),
            qa(Mode::Rag, "spec-qa", 0.73),
            qa(Mode::LlmOnly, "spec-qa", 0.37),
            qa(Mode::KgRag, "oran-qa", 0.64),
        ];
        let t = render_accuracy_table(&reports);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("| Models") && lines[0].contains("spec-qa") && lines[0].contains("oran-qa"));
        assert!(lines[2].starts_with("| LLM-only") && lines[2].contains("0.37") && lines[2].contains(" - "));
        assert!(lines[4].starts_with("| KG-RAG") && lines[4].contains("0.91") && lines[4].contains("0.64"));
    }

    #[test]
    fn difficulty_columns() {
        let t = render_difficulty_table(&[qa(Mode::Rag, "x", 0.5)], "x");
        assert!(t.lines().next().unwrap().contains("| Easy") && t.contains("Intermediate") && t.contains("Hard"));
        assert!(t.lines().nth(2).unwrap().contains("0.50"));
    }
}
