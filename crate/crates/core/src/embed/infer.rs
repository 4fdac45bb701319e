use rand::Rng as _;
use rayon::prelude::*;

use super::model::{EmbeddingModel, Mode};
use super::negative::NegativeTable;
use super::objective::{sgd_step, Input, Scratch, Tables};
use super::store::{Absent, Frozen, Matrix};
use super::train::{keep_probs, subsample_into};
use crate::error::{Error, Result};
use crate::seed;

/// Vector for an unseen document. Word vectors and output weights stay
/// frozen; label vectors are neither read nor written. A fresh vector is
/// drawn from the model's initialization distribution and refined over
/// `steps` passes with the training learning-rate schedule compressed to
/// those passes.
pub fn infer_doc_vector(
    model: &EmbeddingModel,
    tokens: &[String],
    steps: usize,
    seed: u64,
) -> Result<Vec<f32>> {
    Inferrer::new(model)?.infer(tokens, steps, seed)
}

/// Reusable inference context; builds the noise table and subsampling
/// probabilities once per model.
pub struct Inferrer<'a> {
    model: &'a EmbeddingModel,
    negatives: NegativeTable,
    keep: Vec<f32>,
}

impl<'a> Inferrer<'a> {
    pub fn new(model: &'a EmbeddingModel) -> Result<Self> {
        if !model.hyper.mode.is_doc_mode() {
            return Err(Error::Model(format!(
                "inference needs a document-mode model, got {}",
                model.hyper.mode
            )));
        }
        Ok(Inferrer {
            model,
            negatives: NegativeTable::new(&model.vocab),
            keep: keep_probs(&model.vocab, model.hyper.subsample_t),
        })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn infer(&self, tokens: &[String], steps: usize, seed: u64) -> Result<Vec<f32>> {
        let model = self.model;
        let hyper = &model.hyper;
        let ids = model.vocab.encode(tokens);
        if ids.is_empty() {
            return Err(Error::AllOutOfVocabulary);
        }
        let dim = model.dim();
        let mut rng = seed::rng(seed);
        let doc = Matrix::uniform(1, dim, &mut rng);
        let mut tables = Tables {
            words: Frozen(&model.word_in),
            docs: doc,
            labels: Absent,
            output: Frozen(&model.word_out),
        };
        let mut scratch = Scratch::new(dim);
        let mut negs = vec![0usize; hyper.negatives];
        let mut sent = Vec::new();
        let mut inputs: Vec<Input> = Vec::with_capacity(2 * hyper.window + 1);

        for pass in 0..steps {
            let lr = hyper.lr_at(pass as f64 / steps as f64) as f32;
            subsample_into(&ids, &self.keep, &mut rng, &mut sent);
            let n = sent.len();
            for i in 0..n {
                inputs.clear();
                inputs.push(Input::Doc(0));
                if hyper.mode == Mode::Pvdm {
                    let radius = rng.random_range(1..=hyper.window);
                    let lo = i.saturating_sub(radius);
                    let hi = (i + radius).min(n - 1);
                    inputs.extend((lo..=hi).filter(|&j| j != i).map(|j| Input::Word(sent[j])));
                }
                for k in negs.iter_mut() {
                    *k = self.negatives.sample(&mut rng);
                }
                sgd_step(&mut tables, &inputs, sent[i] as usize, &negs, lr, &mut scratch);
            }
        }
        Ok(tables.docs.row(0).to_vec())
    }

    /// Infer every document in parallel. Document `i` uses the seed stream
    /// `(seed, i)`, so results do not depend on the thread count.
    pub fn infer_all(&self, docs: &[&[String]], steps: usize, seed: u64) -> Vec<Result<Vec<f32>>> {
        docs.par_iter()
            .enumerate()
            .map(|(i, t)| self.infer(t, steps, seed::derive(seed, i as u64)))
            .collect()
    }
}
