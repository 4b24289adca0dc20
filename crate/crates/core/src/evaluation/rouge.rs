//! Recall-oriented n-gram and LCS overlap.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::text::terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rouge2")]
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
}

impl RougeVariant {
    pub const ALL: [RougeVariant; 3] = [RougeVariant::Rouge1, RougeVariant::Rouge2, RougeVariant::RougeL];

    pub fn key(self) -> &'static str {
        match self {
            RougeVariant::Rouge1 => "rouge1",
            RougeVariant::Rouge2 => "rouge2",
            RougeVariant::RougeL => "rougeL",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RougeVariant::Rouge1 => "ROUGE-1",
            RougeVariant::Rouge2 => "ROUGE-2",
            RougeVariant::RougeL => "ROUGE-L",
        }
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for RougeVariant {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "rouge1" => Ok(RougeVariant::Rouge1),
            "rouge2" => Ok(RougeVariant::Rouge2),
            "rougel" => Ok(RougeVariant::RougeL),
            _ => Err(EvalError::UnknownMetric(s.to_string())),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Reference n-grams matched by the candidate, each counted at most as often
/// as it occurs in the candidate.
fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    ngram_counts(reference, n)
        .into_iter()
        .map(|(g, rc)| rc.min(cand.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Length of the longest common subsequence; O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE recall of `candidate` against `reference` over lowercase
/// alphanumeric tokens.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> Result<f64, EvalError> {
    let r = terms(reference);
    let c = terms(candidate);
    if r.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let score = match variant {
        RougeVariant::Rouge1 => clipped_overlap(&c, &r, 1) as f64 / r.len() as f64,
        RougeVariant::Rouge2 => {
            if r.len() < 2 {
                return Err(EvalError::ReferenceTooShort { tokens: r.len(), needed: 2 });
            }
            clipped_overlap(&c, &r, 2) as f64 / (r.len() - 1) as f64
        }
        RougeVariant::RougeL => lcs_len(&c, &r) as f64 / r.len() as f64,
    };
    Ok(score)
}
