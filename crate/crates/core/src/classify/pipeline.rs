//! Genre and popularity experiments: seeded dataset versions, joint
//! document/label vector training, inference of held-out vectors,
//! classification and evaluation.
//!
//! Held-out labels are detached from the test documents before training and
//! stay sealed until the evaluation stage; every read goes through a
//! [`LabelAudit`] that counts accesses per stage.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{KnnIndex, DEFAULT_K};
use super::linear::{train_linear, LinearConfig, LinearModel};
use super::predict::{label_vectors_classify, Prediction};
use crate::corpus::{binarize_popularity, split, undersample, Corpus, DatasetVersion, Document};
use crate::embed::{train_doc2vec, EmbeddingModel, Hyperparams, Inferrer, Matrix};
use crate::error::{Error, Result};
use crate::eval::{confusion, f1_scores, macro_mean, ConfusionMatrix, EvalReport};
use crate::seed;

pub const GENRE_VECTOR: &str = "genre-vector";
pub const POPULARITY_VECTOR: &str = "popularity-vector";
pub const KNN: &str = "knn";
pub const SOFTMAX: &str = "softmax";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sample,
    Split,
    Train,
    Infer,
    Classify,
    Evaluate,
}

const STAGES: [Stage; 6] = [
    Stage::Sample,
    Stage::Split,
    Stage::Train,
    Stage::Infer,
    Stage::Classify,
    Stage::Evaluate,
];

/// Counts of held-out label reads, per pipeline stage.
#[derive(Debug, Default)]
pub struct LabelAudit {
    counts: [AtomicU64; 6],
}

impl LabelAudit {
    pub fn record(&self, stage: Stage, reads: u64) {
        self.counts[stage as usize].fetch_add(reads, Ordering::Relaxed);
    }

    pub fn reads(&self, stage: Stage) -> u64 {
        self.counts[stage as usize].load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> BTreeMap<Stage, u64> {
        STAGES.iter().map(|&s| (s, self.reads(s))).collect()
    }
}

/// Test labels detached from their documents.
struct SealedLabels(Vec<String>);

impl SealedLabels {
    fn open(&self, audit: &LabelAudit, stage: Stage) -> &[String] {
        audit.record(stage, self.0.len() as u64);
        &self.0
    }
}

fn seal(test: Corpus) -> Result<(Vec<Document>, SealedLabels)> {
    let mut docs = test.into_documents();
    let labels = docs
        .iter_mut()
        .map(|d| d.label.take().ok_or_else(|| Error::Unlabeled(d.id.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok((docs, SealedLabels(labels)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    /// Classify by cosine similarity to the learned label vectors.
    pub label_vector: bool,
    /// Neighbourhood size for KNN over training document vectors.
    pub knn: Option<usize>,
    pub softmax: Option<LinearConfig>,
}

impl Default for ModelSet {
    fn default() -> Self {
        ModelSet {
            label_vector: true,
            knn: Some(DEFAULT_K),
            softmax: Some(LinearConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub versions: usize,
    /// Documents kept per class by undersampling (genre pipeline).
    pub per_class: usize,
    pub train_fraction: f64,
    /// Embedding hyperparameters; `hyper.seed` is the master seed.
    pub hyper: Hyperparams,
    pub models: ModelSet,
    /// Represent training documents for KNN and softmax by re-inferring them
    /// with the frozen model, as test documents are, instead of using their
    /// jointly trained vectors.
    pub reinfer_train: bool,
    /// Popularity classes smaller than this skip the genre.
    pub min_per_class: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            versions: 10,
            per_class: 1000,
            train_fraction: 0.8,
            hyper: Hyperparams::default(),
            models: ModelSet::default(),
            reinfer_train: false,
            min_per_class: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub true_label: String,
    pub predicted_label: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionResult {
    pub version: usize,
    pub seed: u64,
    pub dataset: DatasetVersion,
    pub reports: Vec<EvalReport>,
    /// Model name -> predictions in test-document order.
    pub predictions: BTreeMap<String, Vec<PredictionRecord>>,
    pub label_reads: BTreeMap<Stage, u64>,
    /// Mean training loss of the first and last epoch.
    pub train_loss: (f64, f64),
}

impl VersionResult {
    pub fn report(&self, model: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.model == model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub model: String,
    pub versions: usize,
    pub mean_per_class_f1: BTreeMap<String, f64>,
    pub std_per_class_f1: BTreeMap<String, f64>,
    pub mean_average_f1: f64,
    pub std_average_f1: f64,
    pub mean_accuracy: f64,
    /// Confusion counts summed over versions.
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreReport {
    pub versions: Vec<VersionResult>,
    pub aggregates: Vec<AggregateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityReport {
    /// Genre -> per-genre binary result.
    pub genres: BTreeMap<String, VersionResult>,
    pub skipped: Vec<String>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = macro_mean(values.iter().copied());
    if values.len() < 2 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (m, var.sqrt())
}

/// Mean and sample standard deviation of each model's scores across versions.
pub fn aggregate(results: &[VersionResult]) -> Result<Vec<AggregateReport>> {
    let Some(first) = results.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for model in first.reports.iter().map(|r| r.model.as_str()) {
        let reports: Vec<&EvalReport> = results
            .iter()
            .map(|v| {
                v.report(model)
                    .ok_or_else(|| Error::invalid(format!("version {} lacks model {model}", v.version)))
            })
            .collect::<Result<_>>()?;
        let classes = reports[0].confusion.classes.clone();
        let n = classes.len();
        let mut counts = vec![vec![0u64; n]; n];
        for r in &reports {
            if r.confusion.classes != classes {
                return Err(Error::invalid("versions disagree on the class set"));
            }
            for (acc, row) in counts.iter_mut().zip(&r.confusion.counts) {
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += c;
                }
            }
        }
        let mut mean_pc = BTreeMap::new();
        let mut std_pc = BTreeMap::new();
        for c in &classes {
            let vals: Vec<f64> = reports.iter().map(|r| r.per_class_f1[c]).collect();
            let (m, s) = mean_std(&vals);
            mean_pc.insert(c.clone(), m);
            std_pc.insert(c.clone(), s);
        }
        let (mean_f1, std_f1) = mean_std(&reports.iter().map(|r| r.average_f1).collect::<Vec<_>>());
        out.push(AggregateReport {
            model: model.to_string(),
            versions: reports.len(),
            mean_per_class_f1: mean_pc,
            std_per_class_f1: std_pc,
            mean_average_f1: mean_f1,
            std_average_f1: std_f1,
            mean_accuracy: macro_mean(reports.iter().map(|r| r.accuracy)),
            confusion: ConfusionMatrix::from_counts(classes, counts)?,
        });
    }
    Ok(out)
}

fn infer_vectors(
    inferrer: &Inferrer,
    docs: &[Document],
    steps: usize,
    seed: u64,
) -> Result<Matrix> {
    let tokens: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let rows = inferrer
        .infer_all(&tokens, steps, seed)
        .into_iter()
        .zip(docs)
        .map(|(r, d)| {
            r.map_err(|e| Error::Model(format!("cannot infer a vector for `{}`: {e}", d.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, inferrer.dim()));
    }
    Ok(Matrix::from_rows(&rows))
}

/// Split, train, infer, classify and evaluate one balanced labeled corpus.
/// Returns the result together with the trained model.
pub fn run_version(
    balanced: &Corpus,
    config: &PipelineConfig,
    label_model: &str,
    version: usize,
    version_seed: u64,
    audit: &LabelAudit,
) -> Result<(VersionResult, EmbeddingModel)> {
    let dataset = split(balanced, config.train_fraction, version_seed)?;
    let train = balanced.select(&dataset.train, balanced.provenance())?;
    let test = balanced.select(&dataset.test, balanced.provenance())?;
    let (test_docs, sealed) = seal(test)?;

    let mut hyper = config.hyper.clone();
    hyper.seed = version_seed;
    let (model, stats) = train_doc2vec(&train, &hyper)?;
    let train_loss = (
        stats.epoch_loss.first().copied().unwrap_or(0.0),
        stats.epoch_loss.last().copied().unwrap_or(0.0),
    );

    let inferrer = Inferrer::new(&model)?;
    let steps = hyper.infer_steps;
    let test_vecs = infer_vectors(&inferrer, &test_docs, steps, seed::derive(version_seed, 7))?;
    let train_labels: Vec<String> = train
        .documents()
        .iter()
        .map(|d| d.label.clone().unwrap())
        .collect();
    let needs_train_vecs = config.models.knn.is_some() || config.models.softmax.is_some();
    let train_vecs = if !needs_train_vecs {
        Matrix::zeros(0, model.dim())
    } else if config.reinfer_train {
        infer_vectors(&inferrer, train.documents(), steps, seed::derive(version_seed, 8))?
    } else {
        model.docs.as_ref().unwrap().vectors.clone()
    };

    let mut predictions: Vec<(String, Vec<Prediction>)> = Vec::new();
    let classify_all = |f: &(dyn Fn(&str, &[f32]) -> Result<Prediction> + Sync)| {
        (0..test_docs.len())
            .into_par_iter()
            .map(|i| f(&test_docs[i].id, test_vecs.row(i)))
            .collect::<Result<Vec<_>>>()
    };
    if config.models.label_vector {
        let labels = model.labels.as_ref().unwrap();
        predictions.push((
            label_model.to_string(),
            classify_all(&|id, v| label_vectors_classify(id, &labels.names, &labels.vectors, v))?,
        ));
    }
    if let Some(k) = config.models.knn {
        let index = KnnIndex::new(train_vecs.clone(), train_labels.clone())?;
        let k = k.min(index.len());
        predictions.push((KNN.to_string(), classify_all(&|id, v| index.classify(id, v, k))?));
    }
    if let Some(cfg) = &config.models.softmax {
        let (linear, _): (LinearModel, _) = train_linear(&train_vecs, &train_labels, cfg)?;
        predictions.push((SOFTMAX.to_string(), classify_all(&|id, v| linear.predict(id, v))?));
    }

    let truths = sealed.open(audit, Stage::Evaluate);
    let classes: Vec<String> = balanced.label_set().iter().cloned().collect();
    let mut reports = Vec::new();
    let mut records = BTreeMap::new();
    for (name, preds) in predictions {
        let predicted: Vec<&str> = preds.iter().map(|p| p.predicted_label.as_str()).collect();
        let truth_refs: Vec<&str> = truths.iter().map(String::as_str).collect();
        let m = confusion(&truth_refs, &predicted, &classes)?;
        reports.push(f1_scores(&m, &name, version_seed));
        let recs = preds
            .into_iter()
            .zip(truths)
            .map(|(p, t)| PredictionRecord {
                doc_id: p.doc_id,
                true_label: t.clone(),
                predicted_label: p.predicted_label,
                scores: p.scores,
            })
            .collect();
        records.insert(name, recs);
    }
    Ok((
        VersionResult {
            version,
            seed: version_seed,
            dataset,
            reports,
            predictions: records,
            label_reads: audit.snapshot(),
            train_loss,
        },
        model,
    ))
}

pub fn version_seed(master: u64, version: usize) -> u64 {
    seed::derive(master, version as u64)
}

fn check_genre_input(corpus: &Corpus) -> Result<()> {
    if corpus.label_set().len() < 2 {
        return Err(Error::invalid(format!(
            "genre pipeline needs at least 2 classes, found {}",
            corpus.label_set().len()
        )));
    }
    Ok(())
}

/// One dataset version of the genre experiment.
pub fn run_genre_version(
    corpus: &Corpus,
    config: &PipelineConfig,
    version: usize,
) -> Result<(VersionResult, EmbeddingModel)> {
    check_genre_input(corpus)?;
    let s = version_seed(config.hyper.seed, version);
    let balanced = undersample(corpus, config.per_class, s)?;
    let audit = LabelAudit::default();
    let out = run_version(&balanced, config, GENRE_VECTOR, version, s, &audit)?;
    info!(
        "version {version}: {}",
        out.0
            .reports
            .iter()
            .map(|r| format!("{} F1 {:.4}", r.model, r.average_f1))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(out)
}

/// All dataset versions, run in parallel, plus their aggregate.
pub fn run_genre_pipeline(corpus: &Corpus, config: &PipelineConfig) -> Result<GenreReport> {
    check_genre_input(corpus)?;
    if config.versions == 0 {
        return Err(Error::invalid("versions must be at least 1"));
    }
    let versions = (0..config.versions)
        .into_par_iter()
        .map(|v| run_genre_version(corpus, config, v).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(&versions)?;
    Ok(GenreReport {
        versions,
        aggregates,
    })
}

/// The balanced binary corpus for one genre, or `None` with the reason it
/// cannot be used.
pub fn popularity_corpus(
    corpus: &Corpus,
    genre: &str,
    config: &PipelineConfig,
) -> Result<std::result::Result<Corpus, String>> {
    let docs: Vec<Document> = corpus
        .documents()
        .iter()
        .filter(|d| d.label.as_deref() == Some(genre))
        .cloned()
        .collect();
    let genre_corpus = Corpus::new(docs, format!("{} [{genre}]", corpus.provenance()))?;
    let s = seed::derive(config.hyper.seed, seed::hash_str(genre));
    let binary = binarize_popularity(&genre_corpus, s)?;
    let per_class = binary.len() / 2;
    if binary.label_set().len() < 2 {
        return Ok(Err("lacks rated documents of both popularity classes".into()));
    }
    if per_class < config.min_per_class.max(2) {
        return Ok(Err(format!(
            "only {per_class} documents per popularity class, {} required",
            config.min_per_class.max(2)
        )));
    }
    Ok(Ok(binary))
}

/// Binary popularity model for one genre; `Ok(None)` if the genre is skipped.
pub fn run_popularity_genre(
    corpus: &Corpus,
    genre: &str,
    config: &PipelineConfig,
) -> Result<Option<(VersionResult, EmbeddingModel)>> {
    match popularity_corpus(corpus, genre, config)? {
        Err(reason) => {
            warn!("skipping genre {genre}: {reason}");
            Ok(None)
        }
        Ok(binary) => {
            let s = seed::derive(config.hyper.seed, seed::hash_str(genre) ^ 0x7061_7270);
            let audit = LabelAudit::default();
            run_version(&binary, config, POPULARITY_VECTOR, 0, s, &audit).map(Some)
        }
    }
}

/// One binary low/high model per genre. Genres without enough rated
/// documents in both classes are skipped with a warning.
pub fn run_popularity_pipeline(corpus: &Corpus, config: &PipelineConfig) -> Result<PopularityReport> {
    let genres: Vec<String> = corpus.label_set().iter().cloned().collect();
    let results = genres
        .par_iter()
        .map(|g| run_popularity_genre(corpus, g, config).map(|r| (g.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = PopularityReport {
        genres: BTreeMap::new(),
        skipped: Vec::new(),
    };
    for (g, r) in results {
        match r {
            Some((v, _)) => {
                report.genres.insert(g, v);
            }
            None => report.skipped.push(g),
        }
    }
    if report.genres.is_empty() {
        return Err(Error::invalid(
            "no genre has enough rated documents in both popularity classes",
        ));
    }
    Ok(report)
}
