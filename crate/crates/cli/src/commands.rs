use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use lyricvec::classify::{
    aggregate, label_vector_classify, run_genre_version, run_popularity_genre, train_linear,
    KnnIndex, LinearConfig, ModelSet, PipelineConfig, Prediction, VersionResult,
};
use lyricvec::corpus::{
    binarize_popularity, dedup, ingest, read_corpus, sample_to_size, undersample, write_jsonl,
    Corpus, Format,
};
use lyricvec::embed::{
    encode_model, load_model, read_word2vec_text, train_doc2vec, train_word2vec,
    write_word2vec_text, EmbeddingModel, Inferrer, Matrix, Mode, WordVectors,
};
use lyricvec::eval::{analogy_eval, confusion, f1_scores, load_analogies, AnalogyOptions};
use lyricvec::synth::{gen_synthetic, SynthConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Command, HyperArgs, Method, PipelineArgs};
use crate::report::{confusion_section, render, CorpusSummary, RunReport, VersionSummary};
use crate::rundir::RunDir;

pub const MODEL: &str = "model.lvec";
pub const REPORT: &str = "report.json";
pub const CONFUSION: &str = "confusion.txt";
pub const CORPUS: &str = "corpus.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const VECTORS_JSONL: &str = "vectors.jsonl";
pub const VECTORS_TXT: &str = "vectors.txt";
pub const SUMMARY: &str = "summary.txt";

/// Settings taken from the environment rather than the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub max_workers: Option<usize>,
}

/// Paths whose contents are hashed into the manifest.
pub fn inputs(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Ingest { input, .. }
        | Command::Dedup { input, .. }
        | Command::Sample { input, .. }
        | Command::TrainWords { input, .. }
        | Command::TrainDocs { input, .. } => vec![input.clone()],
        Command::Infer { model, input, .. } | Command::Classify { model, input, .. } => {
            vec![model.clone(), input.clone()]
        }
        Command::GenrePipeline { pipeline, .. } | Command::PopularityPipeline { pipeline, .. } => {
            vec![pipeline.input.clone()]
        }
        Command::Analogy {
            model,
            vectors,
            questions,
            ..
        } => model
            .iter()
            .chain(vectors.iter())
            .chain([questions])
            .cloned()
            .collect(),
        Command::GenSynthetic { .. } => vec![],
        Command::Report { from, .. } => vec![from.join(REPORT)],
    }
}

pub fn seed(cmd: &Command) -> Option<u64> {
    match cmd {
        Command::Sample { seed, .. }
        | Command::Infer { seed, .. }
        | Command::Classify { seed, .. }
        | Command::GenSynthetic { seed, .. } => Some(*seed),
        Command::TrainWords { hyper, .. }
        | Command::TrainDocs { hyper, .. }
        | Command::GenrePipeline { hyper, .. }
        | Command::PopularityPipeline { hyper, .. } => Some(hyper.seed),
        _ => None,
    }
}

fn corpus_bytes(corpus: &Corpus) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(corpus, &mut buf)?;
    Ok(buf)
}

fn write_corpus(dir: &mut RunDir, command: &str, corpus: &Corpus) -> Result<()> {
    dir.write(CORPUS, &corpus_bytes(corpus)?)?;
    dir.write_json(
        REPORT,
        &RunReport::Corpus {
            command: command.to_string(),
            summary: CorpusSummary::of(corpus),
        },
    )?;
    info!("wrote {} documents", corpus.len());
    Ok(())
}

fn doc_model(path: &Path) -> Result<EmbeddingModel> {
    let model = load_model(path).with_context(|| format!("cannot load model {}", path.display()))?;
    if !model.hyper.mode.is_doc_mode() {
        bail!(
            "{} is a {} word-vector model; a paragraph-vector model is required",
            path.display(),
            model.hyper.mode
        );
    }
    Ok(model)
}

/// Document id and its inferred vector.
type Inferred = (String, Vec<f32>);

/// Infer vectors for every document of `corpus`; failures are reported by id.
fn infer_corpus(
    model: &EmbeddingModel,
    corpus: &Corpus,
    steps: usize,
    seed: u64,
) -> Result<(Vec<Inferred>, Vec<String>)> {
    let inferrer = Inferrer::new(model)?;
    let tokens: Vec<&[String]> = corpus.documents().iter().map(|d| d.tokens.as_slice()).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (doc, r) in corpus.documents().iter().zip(inferrer.infer_all(&tokens, steps, seed)) {
        match r {
            Ok(v) => ok.push((doc.id.clone(), v)),
            Err(e) => {
                warn!("cannot infer `{}`: {e}", doc.id);
                failed.push(doc.id.clone());
            }
        }
    }
    Ok((ok, failed))
}

#[derive(Serialize)]
struct VectorRow<'a> {
    id: &'a str,
    vector: &'a [f32],
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    genre: Option<&'a str>,
    model: &'a str,
    doc_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_label: Option<&'a str>,
    predicted_label: &'a str,
    scores: &'a BTreeMap<String, f64>,
}

fn trained_labels(model: &EmbeddingModel) -> Result<(Matrix, Vec<String>)> {
    let (Some(docs), Some(labels)) = (&model.docs, &model.labels) else {
        bail!("model has no labeled training documents");
    };
    let names = docs
        .labels
        .iter()
        .map(|&l| labels.names[l as usize].clone())
        .collect();
    Ok((docs.vectors.clone(), names))
}

fn pipeline_config(p: &PipelineArgs, h: &HyperArgs, env: Env) -> PipelineConfig {
    PipelineConfig {
        versions: p.versions,
        per_class: p.per_class,
        train_fraction: p.train_fraction,
        hyper: h.to_hyper(Mode::Pvdm, env.max_workers),
        models: ModelSet {
            label_vector: true,
            knn: (p.k > 0).then_some(p.k),
            softmax: (p.softmax_epochs > 0).then_some(LinearConfig {
                epochs: p.softmax_epochs,
                lr: p.softmax_lr,
                l2: p.softmax_l2,
            }),
        },
        reinfer_train: p.reinfer_train,
        min_per_class: p.min_per_class,
    }
}

/// Run `work` for every stage not already completed, in parallel, storing
/// each result as it finishes. Returns results in stage order.
/// `(stage name, output file)` pairs.
type Stages = Vec<(String, String)>;

fn staged<F>(dir: RunDir, resume: bool, stages: Stages, work: F) -> Result<(RunDir, Vec<Option<VersionResult>>)>
where
    F: Fn(usize) -> Result<Option<VersionResult>> + Sync,
{
    let dir = Mutex::new(dir);
    let results = stages
        .par_iter()
        .enumerate()
        .map(|(i, (stage, file))| -> Result<Option<VersionResult>> {
            if resume {
                let done = dir.lock().unwrap().completed_stage(stage);
                if let Some(path) = done {
                    info!("{stage}: up to date, skipping");
                    let r: VersionResult = serde_json::from_slice(&fs::read(&path)?)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    dir.lock().unwrap().reuse_stage(stage)?;
                    return Ok(Some(r));
                }
            }
            let r = work(i)?;
            if let Some(r) = &r {
                let mut d = dir.lock().unwrap();
                d.write_json(file, r)?;
                d.finish_stage(stage, file)?;
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dir.into_inner().unwrap(), results))
}

/// A label usable as a single path component.
fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn prediction_rows<'a>(
    v: &'a VersionResult,
    version: Option<usize>,
    genre: Option<&'a str>,
) -> impl Iterator<Item = PredictionRow<'a>> {
    v.predictions.iter().flat_map(move |(m, ps)| {
        ps.iter().map(move |p| PredictionRow {
            version,
            genre,
            model: m,
            doc_id: &p.doc_id,
            true_label: Some(&p.true_label),
            predicted_label: &p.predicted_label,
            scores: &p.scores,
        })
    })
}

pub fn execute(cmd: &Command, mut dir: RunDir, env: Env) -> Result<()> {
    let resume = cmd.run_args().resume;
    match cmd {
        Command::Ingest { input, format, .. } => {
            let format = format.unwrap_or_else(|| Format::from_path(input));
            let corpus = ingest(input, format)?;
            write_corpus(&mut dir, "ingest", &corpus)?;
        }
        Command::Dedup {
            input, threshold, ..
        } => {
            let corpus = read_corpus(input)?;
            let (kept, report) = dedup(&corpus, *threshold)?;
            info!(
                "removed {} near-duplicates of {} documents",
                report.removed_ids.len(),
                corpus.len()
            );
            dir.write(CORPUS, &corpus_bytes(&kept)?)?;
            dir.write_json(
                REPORT,
                &RunReport::Dedup {
                    input_documents: corpus.len(),
                    summary: CorpusSummary::of(&kept),
                    threshold: report.threshold,
                    kept_for: report.kept_for,
                },
            )?;
        }
        Command::Sample {
            input,
            seed,
            per_class,
            target_bytes,
            popularity,
            ..
        } => {
            let corpus = read_corpus(input)?;
            let out = match (per_class, target_bytes, popularity) {
                (Some(k), _, _) => undersample(&corpus, *k, *seed)?,
                (_, Some(b), _) => sample_to_size(&corpus, *b, *seed)?,
                (_, _, true) => binarize_popularity(&corpus, *seed)?,
                _ => bail!("one of --per-class, --target-bytes or --popularity is required"),
            };
            write_corpus(&mut dir, "sample", &out)?;
        }
        Command::TrainWords { input, hyper, .. } | Command::TrainDocs { input, hyper, .. } => {
            let words = matches!(cmd, Command::TrainWords { .. });
            let hyper = hyper.to_hyper(if words { Mode::SkipGram } else { Mode::Pvdm }, env.max_workers);
            if words == hyper.mode.is_doc_mode() {
                bail!(
                    "mode {} is not a {} mode",
                    hyper.mode,
                    if words { "word-vector" } else { "paragraph-vector" }
                );
            }
            let corpus = read_corpus(input)?;
            let (model, stats) = if words {
                train_word2vec(&corpus, &hyper)?
            } else {
                train_doc2vec(&corpus, &hyper)?
            };
            dir.write(MODEL, &encode_model(&model)?)?;
            if words {
                let mut buf = Vec::new();
                write_word2vec_text(&WordVectors::from_model(&model), &mut buf)?;
                dir.write(VECTORS_TXT, &buf)?;
            }
            dir.write_json(
                REPORT,
                &RunReport::Training {
                    mode: hyper.mode,
                    vocab: model.vocab.len(),
                    documents: model.docs.as_ref().map_or(0, |d| d.ids.len()),
                    labels: model.labels.as_ref().map_or(vec![], |l| l.names.clone()),
                    epoch_loss: stats.epoch_loss,
                    epoch_examples: stats.epoch_examples,
                },
            )?;
        }
        Command::Infer {
            model,
            input,
            steps,
            seed,
            ..
        } => {
            let model = doc_model(model)?;
            let corpus = read_corpus(input)?;
            let steps = steps.unwrap_or(model.hyper.infer_steps);
            let (vectors, failed) = infer_corpus(&model, &corpus, steps, *seed)?;
            let rows: Vec<VectorRow> = vectors
                .iter()
                .map(|(id, v)| VectorRow { id, vector: v })
                .collect();
            dir.write_jsonl(VECTORS_JSONL, &rows)?;
            dir.write_json(
                REPORT,
                &RunReport::Inference {
                    documents: vectors.len(),
                    steps,
                    failed,
                },
            )?;
        }
        Command::Classify {
            model,
            input,
            method,
            k,
            steps,
            seed,
            ..
        } => {
            let model = doc_model(model)?;
            let corpus = read_corpus(input)?;
            let steps = steps.unwrap_or(model.hyper.infer_steps);
            let (vectors, failed) = infer_corpus(&model, &corpus, steps, *seed)?;
            let (name, predictions): (&str, Vec<Prediction>) = match method {
                Method::LabelVector => (
                    "genre-vector",
                    vectors
                        .iter()
                        .map(|(id, v)| {
                            label_vector_classify(&model, v).map(|mut p| {
                                p.doc_id = id.clone();
                                p
                            })
                        })
                        .collect::<lyricvec::Result<_>>()?,
                ),
                Method::Knn => {
                    let (train, labels) = trained_labels(&model)?;
                    let index = KnnIndex::new(train, labels)?;
                    (
                        "knn",
                        vectors
                            .iter()
                            .map(|(id, v)| index.classify(id, v, *k))
                            .collect::<lyricvec::Result<_>>()?,
                    )
                }
                Method::Softmax => {
                    let (train, labels) = trained_labels(&model)?;
                    let (linear, _) = train_linear(&train, &labels, &LinearConfig::default())?;
                    (
                        "softmax",
                        vectors
                            .iter()
                            .map(|(id, v)| linear.predict(id, v))
                            .collect::<lyricvec::Result<_>>()?,
                    )
                }
            };
            let truths: Vec<Option<&str>> = predictions
                .iter()
                .map(|p| corpus.get(&p.doc_id).and_then(|d| d.label.as_deref()))
                .collect();
            let rows: Vec<PredictionRow> = predictions
                .iter()
                .zip(&truths)
                .map(|(p, t)| PredictionRow {
                    version: None,
                    genre: None,
                    model: name,
                    doc_id: &p.doc_id,
                    true_label: *t,
                    predicted_label: &p.predicted_label,
                    scores: &p.scores,
                })
                .collect();
            dir.write_jsonl(PREDICTIONS, &rows)?;
            let mut classes: Vec<String> = model
                .labels
                .as_ref()
                .map(|l| l.names.clone())
                .unwrap_or_default();
            classes.sort();
            let evaluation = match truths.iter().copied().collect::<Option<Vec<&str>>>() {
                Some(t) if !t.is_empty() && t.iter().all(|l| classes.iter().any(|c| c == l)) => {
                    let pred: Vec<&str> = predictions.iter().map(|p| p.predicted_label.as_str()).collect();
                    let m = confusion(&t, &pred, &classes)?;
                    let mut text = String::new();
                    confusion_section(&mut text, name, &m);
                    dir.write(CONFUSION, text.as_bytes())?;
                    Some(f1_scores(&m, name, *seed))
                }
                _ => {
                    info!("input lacks known labels for every document; skipping evaluation");
                    None
                }
            };
            dir.write_json(
                REPORT,
                &RunReport::Classification {
                    method: name.to_string(),
                    documents: predictions.len(),
                    failed,
                    evaluation,
                },
            )?;
        }
        Command::GenrePipeline {
            pipeline, hyper, ..
        } => {
            let config = pipeline_config(pipeline, hyper, env);
            if config.versions == 0 {
                bail!("versions must be at least 1");
            }
            let corpus = read_corpus(&pipeline.input)?;
            let stages = (0..config.versions)
                .map(|v| (format!("version-{v}"), format!("versions/v{v}/result.json")))
                .collect();
            let (d, results) = staged(dir, resume, stages, |v| {
                run_genre_version(&corpus, &config, v).map(|(r, _)| Some(r)).map_err(Into::into)
            })?;
            dir = d;
            let versions: Vec<VersionResult> = results.into_iter().flatten().collect();
            let aggregates = aggregate(&versions)?;
            let mut text = String::new();
            for a in &aggregates {
                confusion_section(&mut text, &a.model, &a.confusion);
            }
            dir.write(CONFUSION, text.as_bytes())?;
            let rows: Vec<PredictionRow> = versions
                .iter()
                .flat_map(|v| prediction_rows(v, Some(v.version), None))
                .collect();
            dir.write_jsonl(PREDICTIONS, &rows)?;
            let report = RunReport::Genre {
                aggregates,
                versions: versions.iter().map(VersionSummary::of).collect(),
            };
            print!("{}", render(&report, 2));
            dir.write_json(REPORT, &report)?;
        }
        Command::PopularityPipeline {
            pipeline, hyper, ..
        } => {
            let config = pipeline_config(pipeline, hyper, env);
            let corpus = read_corpus(&pipeline.input)?;
            let genres: Vec<String> = corpus.label_set().iter().cloned().collect();
            let stages = genres
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let file = format!("genres/{i:03}-{}/result.json", file_safe(g));
                    (format!("genre-{g}"), file)
                })
                .collect();
            let (d, results) = staged(dir, resume, stages, |i| {
                Ok(run_popularity_genre(&corpus, &genres[i], &config)?.map(|(r, _)| r))
            })?;
            dir = d;
            let mut done = BTreeMap::new();
            let mut skipped = Vec::new();
            for (g, r) in genres.iter().zip(results) {
                match r {
                    Some(r) => {
                        done.insert(g.clone(), r);
                    }
                    None => skipped.push(g.clone()),
                }
            }
            if done.is_empty() {
                bail!("no genre has enough rated documents in both popularity classes");
            }
            let mut text = String::new();
            for (g, v) in &done {
                for r in &v.reports {
                    confusion_section(&mut text, &format!("{g} {}", r.model), &r.confusion);
                }
            }
            dir.write(CONFUSION, text.as_bytes())?;
            let rows: Vec<PredictionRow> = done
                .iter()
                .flat_map(|(g, v)| prediction_rows(v, None, Some(g)))
                .collect();
            dir.write_jsonl(PREDICTIONS, &rows)?;
            let report = RunReport::Popularity {
                genres: done.iter().map(|(g, v)| (g.clone(), VersionSummary::of(v))).collect(),
                skipped,
            };
            print!("{}", render(&report, 2));
            dir.write_json(REPORT, &report)?;
        }
        Command::Analogy {
            model,
            vectors,
            questions,
            restrict_vocab,
            ..
        } => {
            let words = match (model, vectors) {
                (Some(m), _) => WordVectors::from_model(&load_model(m)?),
                (None, Some(v)) => {
                    let f = fs::File::open(v).with_context(|| format!("cannot open {}", v.display()))?;
                    read_word2vec_text(std::io::BufReader::new(f))?
                }
                (None, None) => bail!("--model or --vectors is required"),
            };
            let set = load_analogies(questions)?;
            let report = analogy_eval(
                &words,
                &set,
                AnalogyOptions {
                    restrict_vocab: *restrict_vocab,
                },
            )?;
            let table = report.to_table();
            print!("{table}");
            dir.write("analogy.txt", table.as_bytes())?;
            dir.write_json(REPORT, &RunReport::Analogy(report))?;
        }
        Command::GenSynthetic {
            classes,
            docs_per_class,
            vocab_per_class,
            overlap_fraction,
            seed,
            min_len,
            max_len,
            marker_vocab,
            marker_rate,
            high_only_classes,
            ..
        } => {
            let synth = gen_synthetic(&SynthConfig {
                classes: *classes,
                docs_per_class: *docs_per_class,
                vocab_per_class: *vocab_per_class,
                overlap_fraction: *overlap_fraction,
                seed: *seed,
                min_len: *min_len,
                max_len: *max_len,
                marker_vocab: *marker_vocab,
                marker_rate: *marker_rate,
                high_only_classes: *high_only_classes,
            })?;
            dir.write_json("vocab.json", &synth.vocab)?;
            write_corpus(&mut dir, "gen-synthetic", &synth.corpus)?;
        }
        Command::Report { from, top_k, .. } => {
            let path = from.join(REPORT);
            let report: RunReport = serde_json::from_slice(
                &fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?,
            )
            .with_context(|| format!("{} is not a run report", path.display()))?;
            let text = render(&report, *top_k);
            print!("{text}");
            dir.write(SUMMARY, text.as_bytes())?;
        }
    }
    dir.finish()
}
