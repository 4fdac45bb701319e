//! Word-analogy benchmark in the questions-words format, scored with 3CosAdd.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::format_pct;
use crate::embed::{Matrix, WordVectors};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
}

impl Question {
    fn words(&self) -> [&str; 4] {
        [&self.a, &self.b, &self.c, &self.expected]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalogySet {
    pub categories: Vec<Category>,
}

impl AnalogySet {
    pub fn question_count(&self) -> usize {
        self.categories.iter().map(|c| c.questions.len()).sum()
    }
}

pub fn load_analogies(path: &Path) -> Result<AnalogySet> {
    parse_analogies(BufReader::new(File::open(path)?))
}

/// Parse `: category` headers followed by four-token question lines. Tokens
/// are lowercased to match the tokenizer's casing.
pub fn parse_analogies<R: BufRead>(reader: R) -> Result<AnalogySet> {
    let mut set = AnalogySet::default();
    let mut names = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix(':') {
            let name = name.trim().to_string();
            if name.is_empty() || !names.insert(name.clone()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("empty or repeated category name `{name}`"),
                });
            }
            set.categories.push(Category {
                name,
                questions: Vec::new(),
            });
            continue;
        }
        let words: Vec<String> = trimmed.split_whitespace().map(str::to_lowercase).collect();
        if words.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 tokens, found {}", words.len()),
            });
        }
        let category = set.categories.last_mut().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "question before any `: category` header".into(),
        })?;
        let mut w = words.into_iter();
        category.questions.push(Question {
            a: w.next().unwrap(),
            b: w.next().unwrap(),
            c: w.next().unwrap(),
            expected: w.next().unwrap(),
        });
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub name: String,
    pub attempted: usize,
    pub skipped_oov: usize,
    pub correct: usize,
    /// Percent of attempted questions answered correctly.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReport {
    pub categories: Vec<CategoryResult>,
    pub attempted: usize,
    pub skipped_oov: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
}

impl AnalogyReport {
    pub fn to_table(&self) -> String {
        let width = self
            .categories
            .iter()
            .map(|c| c.name.len())
            .chain([24])
            .max()
            .unwrap();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$} {:>9} {:>9} {:>9} {:>8}",
            "task", "attempted", "skipped", "correct", "acc%"
        );
        for (i, c) in self.categories.iter().enumerate() {
            let name = format!("{}) {}", i + 1, c.name);
            let _ = writeln!(
                out,
                "{:<width$} {:>9} {:>9} {:>9} {:>8}",
                name,
                c.attempted,
                c.skipped_oov,
                c.correct,
                format_pct(c.accuracy)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$} {:>9} {:>9} {:>9} {:>8}",
            "Overall Across All Tasks",
            self.attempted,
            self.skipped_oov,
            self.correct,
            format_pct(self.overall_accuracy)
        );
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyOptions {
    /// Consider only the first N vocabulary entries (most frequent first for
    /// trained models), both for OOV checks and as answer candidates.
    pub restrict_vocab: Option<usize>,
}

fn pct(correct: usize, attempted: usize) -> f64 {
    if attempted == 0 {
        0.0
    } else {
        100.0 * correct as f64 / attempted as f64
    }
}

fn unit_rows(m: &Matrix, rows: usize) -> Matrix {
    let cols = m.cols();
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let src = m.row(i);
        let n = src.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt();
        if n > 0.0 {
            for (d, s) in out.row_mut(i).iter_mut().zip(src) {
                *d = (f64::from(*s) / n) as f32;
            }
        }
    }
    out
}

/// Answer each question with `argmax_d cos(v_d, v_b - v_a + v_c)` over unit
/// vectors, excluding a, b and c. Questions with any out-of-vocabulary word
/// are skipped and do not count as attempted.
pub fn analogy_eval(
    vectors: &WordVectors,
    set: &AnalogySet,
    options: AnalogyOptions,
) -> Result<AnalogyReport> {
    if vectors.is_empty() {
        return Err(Error::EmptyVocabulary(0));
    }
    let limit = options
        .restrict_vocab
        .unwrap_or(vectors.len())
        .min(vectors.len());
    let unit = unit_rows(vectors.vectors(), limit);
    let lookup = |w: &str| vectors.get(w).filter(|&i| i < limit);

    let outcome = |q: &Question| -> Option<bool> {
        let [a, b, c, d] = q.words().map(lookup);
        let (a, b, c, d) = (a?, b?, c?, d?);
        let query: Vec<f32> = (0..unit.cols())
            .map(|k| unit.row(b)[k] - unit.row(a)[k] + unit.row(c)[k])
            .collect();
        let mut best = (f32::NEG_INFINITY, usize::MAX);
        for (i, row) in unit.iter_rows().enumerate() {
            if i == a || i == b || i == c {
                continue;
            }
            let s: f32 = row.iter().zip(&query).map(|(x, y)| x * y).sum();
            if s > best.0 {
                best = (s, i);
            }
        }
        Some(best.1 == d)
    };

    let categories: Vec<CategoryResult> = set
        .categories
        .iter()
        .map(|cat| {
            let results: Vec<Option<bool>> = cat.questions.par_iter().map(outcome).collect();
            let attempted = results.iter().filter(|r| r.is_some()).count();
            let correct = results.iter().filter(|r| **r == Some(true)).count();
            CategoryResult {
                name: cat.name.clone(),
                attempted,
                skipped_oov: results.len() - attempted,
                correct,
                accuracy: pct(correct, attempted),
            }
        })
        .collect();
    let attempted = categories.iter().map(|c| c.attempted).sum();
    let correct = categories.iter().map(|c| c.correct).sum();
    Ok(AnalogyReport {
        attempted,
        skipped_oov: categories.iter().map(|c| c.skipped_oov).sum(),
        correct,
        overall_accuracy: pct(correct, attempted),
        categories,
    })
}
