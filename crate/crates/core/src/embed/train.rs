//! Word2vec and paragraph-vector training.
//!
//! Documents are processed in a seeded shuffled order each epoch. With more
//! than one worker the shuffled order is sharded and every worker updates the
//! same [`SharedMatrix`] tables without locking; only `workers == 1` runs are
//! reproducible bit for bit.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::model::{DocVectors, EmbeddingModel, Hyperparams, LabelVectors, Mode, TrainStats};
use super::negative::NegativeTable;
use super::objective::{sgd_step, Input, Scratch, Tables};
use super::store::{Matrix, RowStore, SharedMatrix};
use super::Vocabulary;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Probability of keeping one occurrence of a word whose corpus frequency
/// ratio is `freq_ratio`: `min(1, sqrt(t/f) + t/f)`.
pub fn subsample_keep_prob(freq_ratio: f64, t: f64) -> f64 {
    let r = t / freq_ratio;
    (r.sqrt() + r).min(1.0)
}

pub(crate) fn keep_probs(vocab: &Vocabulary, t: f64) -> Vec<f32> {
    let total = vocab.total_tokens() as f64;
    vocab
        .freqs()
        .iter()
        .map(|&f| {
            if t <= 0.0 {
                1.0
            } else {
                subsample_keep_prob(f as f64 / total, t) as f32
            }
        })
        .collect()
}

pub(crate) fn subsample_into(ids: &[u32], keep: &[f32], rng: &mut Rng, out: &mut Vec<u32>) {
    out.clear();
    for &w in ids {
        let p = keep[w as usize];
        if p >= 1.0 || rng.random::<f32>() < p {
            out.push(w);
        }
    }
}

struct Encoded {
    tokens: Vec<u32>,
    label: u32,
}

struct Job<'a> {
    docs: Vec<Encoded>,
    negatives: NegativeTable,
    keep: Vec<f32>,
    hyper: &'a Hyperparams,
    planned_tokens: u64,
}

pub fn train_word2vec(corpus: &Corpus, hyper: &Hyperparams) -> Result<(EmbeddingModel, TrainStats)> {
    hyper.validate()?;
    if hyper.mode.is_doc_mode() {
        return Err(Error::invalid(format!(
            "mode {} is a document mode; use train_doc2vec",
            hyper.mode
        )));
    }
    let vocab = Vocabulary::build(corpus, hyper.min_count)?;
    let docs: Vec<Encoded> = corpus
        .documents()
        .iter()
        .map(|d| Encoded {
            tokens: vocab.encode(&d.tokens),
            label: 0,
        })
        .collect();
    let in_vocab: usize = docs.iter().map(|d| d.tokens.len()).sum();
    if in_vocab <= hyper.window {
        return Err(Error::CorpusTooSmall(format!(
            "{in_vocab} in-vocabulary tokens, more than the window of {} required",
            hyper.window
        )));
    }
    let dim = hyper.dim;
    let tables = Tables {
        words: Matrix::uniform(vocab.len(), dim, &mut seed::rng_for(hyper.seed, 1)),
        docs: Matrix::zeros(0, dim),
        labels: Matrix::zeros(0, dim),
        output: Matrix::zeros(vocab.len(), dim),
    };
    let (tables, stats) = run(tables, &vocab, docs, hyper);
    let model = EmbeddingModel {
        vocab,
        word_in: tables.words,
        word_out: tables.output,
        docs: None,
        labels: None,
        hyper: hyper.clone(),
    };
    Ok((model, stats))
}

/// Train document vectors jointly with one vector per class label. Each
/// document contributes its own vector and its label's vector to every
/// training example drawn from it.
pub fn train_doc2vec(corpus: &Corpus, hyper: &Hyperparams) -> Result<(EmbeddingModel, TrainStats)> {
    hyper.validate()?;
    if !hyper.mode.is_doc_mode() {
        return Err(Error::invalid(format!(
            "mode {} is a word mode; use train_word2vec",
            hyper.mode
        )));
    }
    if let Some(d) = corpus.documents().iter().find(|d| d.label.is_none()) {
        return Err(Error::Unlabeled(d.id.clone()));
    }
    let names: Vec<String> = corpus.label_set().iter().cloned().collect();
    let vocab = Vocabulary::build(corpus, hyper.min_count)?;
    let docs: Vec<Encoded> = corpus
        .documents()
        .iter()
        .map(|d| {
            let label = d.label.as_deref().unwrap();
            Encoded {
                tokens: vocab.encode(&d.tokens),
                label: names.binary_search_by(|n| n.as_str().cmp(label)).unwrap() as u32,
            }
        })
        .collect();
    let dim = hyper.dim;
    let tables = Tables {
        words: Matrix::uniform(vocab.len(), dim, &mut seed::rng_for(hyper.seed, 1)),
        docs: Matrix::uniform(docs.len(), dim, &mut seed::rng_for(hyper.seed, 2)),
        labels: Matrix::uniform(names.len(), dim, &mut seed::rng_for(hyper.seed, 3)),
        output: Matrix::zeros(vocab.len(), dim),
    };
    let doc_labels: Vec<u32> = docs.iter().map(|d| d.label).collect();
    let (tables, stats) = run(tables, &vocab, docs, hyper);
    let model = EmbeddingModel {
        vocab,
        word_in: tables.words,
        word_out: tables.output,
        docs: Some(DocVectors {
            ids: corpus.documents().iter().map(|d| d.id.clone()).collect(),
            labels: doc_labels,
            vectors: tables.docs,
        }),
        labels: Some(LabelVectors {
            names,
            vectors: tables.labels,
        }),
        hyper: hyper.clone(),
    };
    Ok((model, stats))
}

type Owned = Tables<Matrix, Matrix, Matrix, Matrix>;

fn run(tables: Owned, vocab: &Vocabulary, docs: Vec<Encoded>, hyper: &Hyperparams) -> (Owned, TrainStats) {
    let planned_tokens =
        docs.iter().map(|d| d.tokens.len() as u64).sum::<u64>() * hyper.epochs as u64;
    let job = Job {
        docs,
        negatives: NegativeTable::new(vocab),
        keep: keep_probs(vocab, hyper.subsample_t),
        hyper,
        planned_tokens,
    };
    if hyper.workers <= 1 {
        run_sequential(tables, &job)
    } else {
        run_shared(tables, &job)
    }
}

fn epoch_order(job: &Job, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..job.docs.len()).collect();
    order.shuffle(&mut seed::rng_for(job.hyper.seed, 100 + epoch as u64));
    order
}

fn run_sequential(mut tables: Owned, job: &Job) -> (Owned, TrainStats) {
    let progress = AtomicU64::new(0);
    let mut stats = TrainStats::default();
    for epoch in 0..job.hyper.epochs {
        let order = epoch_order(job, epoch);
        let mut rng = seed::rng_for(seed::derive(job.hyper.seed, 1000 + epoch as u64), 0);
        let (loss, n) = train_shard(&mut tables, job, &order, &mut rng, &progress);
        stats.epoch_loss.push(if n == 0 { 0.0 } else { loss / n as f64 });
        stats.epoch_examples.push(n);
    }
    (tables, stats)
}

fn run_shared(tables: Owned, job: &Job) -> (Owned, TrainStats) {
    let shared = Tables {
        words: SharedMatrix::new(tables.words),
        docs: SharedMatrix::new(tables.docs),
        labels: SharedMatrix::new(tables.labels),
        output: SharedMatrix::new(tables.output),
    };
    let workers = job.hyper.workers;
    let progress = AtomicU64::new(0);
    let mut stats = TrainStats::default();
    for epoch in 0..job.hyper.epochs {
        let order = epoch_order(job, epoch);
        let chunk = order.len().div_ceil(workers).max(1);
        let results: Vec<(f64, u64)> = thread::scope(|s| {
            let handles: Vec<_> = order
                .chunks(chunk)
                .enumerate()
                .map(|(w, shard)| {
                    let shared = &shared;
                    let progress = &progress;
                    s.spawn(move || {
                        let mut local = Tables {
                            words: shared.words.handle(),
                            docs: shared.docs.handle(),
                            labels: shared.labels.handle(),
                            output: shared.output.handle(),
                        };
                        let mut rng =
                            seed::rng_for(seed::derive(job.hyper.seed, 1000 + epoch as u64), w as u64);
                        train_shard(&mut local, job, shard, &mut rng, progress)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        });
        let loss: f64 = results.iter().map(|r| r.0).sum();
        let n: u64 = results.iter().map(|r| r.1).sum();
        stats.epoch_loss.push(if n == 0 { 0.0 } else { loss / n as f64 });
        stats.epoch_examples.push(n);
    }
    let tables = Tables {
        words: shared.words.into_matrix(),
        docs: shared.docs.into_matrix(),
        labels: shared.labels.into_matrix(),
        output: shared.output.into_matrix(),
    };
    (tables, stats)
}

/// Train over the documents at `order`. Returns (summed loss, example count).
fn train_shard<S: RowStore<f32>>(
    tables: &mut Tables<S, S, S, S>,
    job: &Job,
    order: &[usize],
    rng: &mut Rng,
    progress: &AtomicU64,
) -> (f64, u64) {
    let hyper = job.hyper;
    let window = hyper.window;
    let mut scratch = Scratch::new(hyper.dim);
    let mut sent = Vec::new();
    let mut inputs: Vec<Input> = Vec::with_capacity(2 * window + 2);
    let mut negs = vec![0usize; hyper.negatives];
    let mut loss = 0.0f64;
    let mut examples = 0u64;

    let mut step = |tables: &mut Tables<S, S, S, S>, inputs: &[Input], target: u32, lr: f32, rng: &mut Rng| {
        for n in negs.iter_mut() {
            *n = job.negatives.sample(rng);
        }
        let l = sgd_step(tables, inputs, target as usize, &negs, lr, &mut scratch);
        loss += f64::from(l);
        examples += 1;
    };

    for &d in order {
        let doc = &job.docs[d];
        let done = progress.fetch_add(doc.tokens.len() as u64, Ordering::Relaxed);
        let lr = hyper.lr_at(done as f64 / job.planned_tokens.max(1) as f64) as f32;
        subsample_into(&doc.tokens, &job.keep, rng, &mut sent);
        let n = sent.len();
        let doc_in = Input::Doc(d as u32);
        let label_in = Input::Label(doc.label);

        for i in 0..n {
            let radius = rng.random_range(1..=window);
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n.saturating_sub(1));
            match hyper.mode {
                Mode::SkipGram => {
                    for j in (lo..=hi).filter(|&j| j != i) {
                        step(tables, &[Input::Word(sent[i])], sent[j], lr, rng);
                    }
                }
                Mode::Cbow | Mode::Pvdm => {
                    inputs.clear();
                    if hyper.mode == Mode::Pvdm {
                        inputs.push(doc_in);
                        inputs.push(label_in);
                    }
                    inputs.extend((lo..=hi).filter(|&j| j != i).map(|j| Input::Word(sent[j])));
                    if !inputs.is_empty() {
                        step(tables, &inputs, sent[i], lr, rng);
                    }
                }
                Mode::Pvdbow => {
                    step(tables, &[doc_in], sent[i], lr, rng);
                    step(tables, &[label_in], sent[i], lr, rng);
                    // Interleaved skip-gram keeps word vectors trained too.
                    for j in (lo..=hi).filter(|&j| j != i) {
                        step(tables, &[Input::Word(sent[i])], sent[j], lr, rng);
                    }
                }
            }
        }
    }
    (loss, examples)
}
