use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::invalid("confusion counts must be C x C"));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// Aligned text rendering with row and column totals.
    pub fn to_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.len())
            .chain([5, self.total().to_string().len()])
            .max()
            .unwrap_or(5)
            + 2;
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "true\\pred");
        for c in &self.classes {
            let _ = write!(out, "{c:>width$}");
        }
        let _ = writeln!(out, "{:>width$}", "total");
        for (i, c) in self.classes.iter().enumerate() {
            let _ = write!(out, "{c:<width$}");
            for v in &self.counts[i] {
                let _ = write!(out, "{v:>width$}");
            }
            let _ = writeln!(out, "{:>width$}", self.row_sum(i));
        }
        out
    }
}

/// Tally aligned (truth, prediction) pairs over `classes`.
pub fn confusion<S: AsRef<str>>(
    truths: &[S],
    predictions: &[S],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if truths.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} truths but {} predictions",
            truths.len(),
            predictions.len()
        )));
    }
    let index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let lookup = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    for (t, p) in truths.iter().zip(predictions) {
        counts[lookup(t.as_ref())?][lookup(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One-vs-rest precision, recall and F1 per class. Zero denominators give 0.
pub fn class_scores(m: &ConfusionMatrix) -> Vec<ClassScores> {
    (0..m.len())
        .map(|c| {
            let tp = m.counts[c][c] as f64;
            let fp = m.col_sum(c) as f64 - tp;
            let fn_ = m.row_sum(c) as f64 - tp;
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores {
                precision,
                recall,
                f1,
            }
        })
        .collect()
}

pub fn macro_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub seed: u64,
    pub per_class_f1: BTreeMap<String, f64>,
    /// Unweighted mean of the per-class F1 values.
    pub average_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Per-class F1, macro average and accuracy from a confusion matrix.
pub fn f1_scores(m: &ConfusionMatrix, model: &str, seed: u64) -> EvalReport {
    let scores = class_scores(m);
    let per_class_f1: BTreeMap<String, f64> = m
        .classes
        .iter()
        .cloned()
        .zip(scores.iter().map(|s| s.f1))
        .collect();
    let total = m.total();
    let correct: u64 = (0..m.len()).map(|i| m.counts[i][i]).sum();
    EvalReport {
        model: model.to_string(),
        seed,
        average_f1: macro_mean(scores.iter().map(|s| s.f1)),
        per_class_f1,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
        confusion: m.clone(),
    }
}

/// Format a percentage with two decimals, e.g. `50.33`.
pub fn format_pct(p: f64) -> String {
    format!("{p:.2}")
}
