//! The `report.json` schema shared by all subcommands, and its plain-text
//! rendering.

use std::collections::BTreeMap;
use std::fmt::Write;

use lyricvec::classify::{AggregateReport, VersionResult};
use lyricvec::corpus::Corpus;
use lyricvec::embed::Mode;
use lyricvec::eval::{asymmetry_report, format_pct, AnalogyReport, ConfusionMatrix, EvalReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub documents: usize,
    pub tokens: usize,
    pub text_bytes: usize,
    /// Label -> document count; unlabeled documents are not listed.
    pub classes: BTreeMap<String, usize>,
    pub rated: usize,
}

impl CorpusSummary {
    pub fn of(corpus: &Corpus) -> Self {
        let mut classes = BTreeMap::new();
        for d in corpus.documents() {
            if let Some(l) = &d.label {
                *classes.entry(l.clone()).or_insert(0) += 1;
            }
        }
        CorpusSummary {
            documents: corpus.len(),
            tokens: corpus.total_tokens(),
            text_bytes: corpus.text_bytes(),
            classes,
            rated: corpus.documents().iter().filter(|d| d.rating.is_some()).count(),
        }
    }
}

/// Evaluation of one dataset version without its per-document predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionSummary {
    pub version: usize,
    pub seed: u64,
    pub train: usize,
    pub test: usize,
    pub reports: Vec<EvalReport>,
    pub train_loss: (f64, f64),
}

impl VersionSummary {
    pub fn of(v: &VersionResult) -> Self {
        VersionSummary {
            version: v.version,
            seed: v.seed,
            train: v.dataset.train.len(),
            test: v.dataset.test.len(),
            reports: v.reports.clone(),
            train_loss: v.train_loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunReport {
    Corpus {
        command: String,
        summary: CorpusSummary,
    },
    Dedup {
        input_documents: usize,
        summary: CorpusSummary,
        threshold: f64,
        /// Removed id -> id of the kept document it duplicates.
        kept_for: BTreeMap<String, String>,
    },
    Training {
        mode: Mode,
        vocab: usize,
        documents: usize,
        labels: Vec<String>,
        epoch_loss: Vec<f64>,
        epoch_examples: Vec<u64>,
    },
    Inference {
        documents: usize,
        steps: usize,
        /// Documents without any in-vocabulary token.
        failed: Vec<String>,
    },
    Classification {
        method: String,
        documents: usize,
        failed: Vec<String>,
        /// Present when every classified document carries a known label.
        evaluation: Option<EvalReport>,
    },
    Genre {
        aggregates: Vec<AggregateReport>,
        versions: Vec<VersionSummary>,
    },
    Popularity {
        genres: BTreeMap<String, VersionSummary>,
        skipped: Vec<String>,
    },
    Analogy(AnalogyReport),
}

pub fn confusion_section(out: &mut String, title: &str, m: &ConfusionMatrix) {
    let _ = writeln!(out, "## {title}");
    out.push_str(&m.to_table());
    out.push('\n');
}

fn eval_table(out: &mut String, reports: &[EvalReport]) {
    let Some(first) = reports.first() else { return };
    let width = first.per_class_f1.keys().map(String::len).chain([7]).max().unwrap();
    let _ = write!(out, "{:<width$}", "class");
    for r in reports {
        let _ = write!(out, " {:>18}", r.model);
    }
    out.push('\n');
    for class in first.per_class_f1.keys() {
        let _ = write!(out, "{class:<width$}");
        for r in reports {
            let f = r.per_class_f1.get(class).copied().unwrap_or(f64::NAN);
            let _ = write!(out, " {:>18}", format_pct(100.0 * f));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<width$}", "average");
    for r in reports {
        let _ = write!(out, " {:>18}", format_pct(100.0 * r.average_f1));
    }
    out.push('\n');
}

fn aggregate_table(out: &mut String, aggs: &[AggregateReport]) {
    let Some(first) = aggs.first() else { return };
    let width = first.mean_per_class_f1.keys().map(String::len).chain([7]).max().unwrap();
    let _ = write!(out, "{:<width$}", "class");
    for a in aggs {
        let _ = write!(out, " {:>22}", a.model);
    }
    out.push('\n');
    let cell = |m: f64, s: f64| format!("{} ± {}", format_pct(100.0 * m), format_pct(100.0 * s));
    for class in first.mean_per_class_f1.keys() {
        let _ = write!(out, "{class:<width$}");
        for a in aggs {
            let _ = write!(
                out,
                " {:>22}",
                cell(a.mean_per_class_f1[class], a.std_per_class_f1[class])
            );
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<width$}", "average");
    for a in aggs {
        let _ = write!(out, " {:>22}", cell(a.mean_average_f1, a.std_average_f1));
    }
    out.push('\n');
}

fn asymmetry_section(out: &mut String, model: &str, m: &ConfusionMatrix, top_k: usize) {
    let a = asymmetry_report(m, top_k);
    if a.flags.is_empty() {
        return;
    }
    let _ = writeln!(out, "asymmetric confusions ({model}, top {top_k}):");
    for f in &a.flags {
        let _ = writeln!(
            out,
            "  {} -> {}: {} (reverse {})",
            f.class,
            f.confused_with,
            format_pct(100.0 * f.rate),
            format_pct(100.0 * f.reverse_rate)
        );
    }
}

/// Human-readable summary of a run report.
pub fn render(report: &RunReport, top_k: usize) -> String {
    let mut out = String::new();
    match report {
        RunReport::Corpus { command, summary } => {
            let _ = writeln!(
                out,
                "{command}: {} documents, {} tokens, {} rated",
                summary.documents, summary.tokens, summary.rated
            );
            for (c, n) in &summary.classes {
                let _ = writeln!(out, "  {c}: {n}");
            }
        }
        RunReport::Dedup {
            input_documents,
            summary,
            threshold,
            ..
        } => {
            let _ = writeln!(
                out,
                "dedup at Jaccard >= {threshold}: kept {} of {input_documents} documents",
                summary.documents
            );
        }
        RunReport::Training {
            mode,
            vocab,
            documents,
            labels,
            epoch_loss,
            ..
        } => {
            let _ = writeln!(
                out,
                "{mode}: vocabulary {vocab}, {documents} documents, {} labels",
                labels.len()
            );
            for (i, l) in epoch_loss.iter().enumerate() {
                let _ = writeln!(out, "  epoch {:>3}: loss {l:.5}", i + 1);
            }
        }
        RunReport::Inference {
            documents, failed, ..
        } => {
            let _ = writeln!(out, "inferred {documents} vectors, {} failed", failed.len());
        }
        RunReport::Classification {
            method,
            documents,
            failed,
            evaluation,
        } => {
            let _ = writeln!(
                out,
                "{method}: classified {documents} documents, {} failed",
                failed.len()
            );
            if let Some(e) = evaluation {
                eval_table(&mut out, std::slice::from_ref(e));
                let _ = writeln!(out, "accuracy {}", format_pct(100.0 * e.accuracy));
                asymmetry_section(&mut out, &e.model, &e.confusion, top_k);
            }
        }
        RunReport::Genre {
            aggregates,
            versions,
        } => {
            let _ = writeln!(out, "genre F1 (%), mean ± std over {} versions", versions.len());
            aggregate_table(&mut out, aggregates);
            for a in aggregates {
                asymmetry_section(&mut out, &a.model, &a.confusion, top_k);
            }
        }
        RunReport::Popularity { genres, skipped } => {
            let _ = writeln!(out, "popularity F1 (%) per genre");
            for (g, v) in genres {
                let _ = writeln!(out, "# {g}");
                eval_table(&mut out, &v.reports);
            }
            if !skipped.is_empty() {
                let _ = writeln!(out, "skipped: {}", skipped.join(", "));
            }
        }
        RunReport::Analogy(a) => out.push_str(&a.to_table()),
    }
    out
}
