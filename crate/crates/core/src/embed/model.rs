use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::Matrix;
use super::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    SkipGram,
    Cbow,
    Pvdm,
    Pvdbow,
}

impl Mode {
    pub fn is_doc_mode(self) -> bool {
        matches!(self, Mode::Pvdm | Mode::Pvdbow)
    }

    fn code(self) -> u8 {
        match self {
            Mode::SkipGram => 0,
            Mode::Cbow => 1,
            Mode::Pvdm => 2,
            Mode::Pvdbow => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Mode> {
        Some(match c {
            0 => Mode::SkipGram,
            1 => Mode::Cbow,
            2 => Mode::Pvdm,
            3 => Mode::Pvdbow,
            _ => return None,
        })
    }

    pub(crate) fn to_code(self) -> u8 {
        self.code()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SkipGram => "skipgram",
            Mode::Cbow => "cbow",
            Mode::Pvdm => "pvdm",
            Mode::Pvdbow => "pvdbow",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skipgram" | "skip-gram" | "sg" => Ok(Mode::SkipGram),
            "cbow" => Ok(Mode::Cbow),
            "pvdm" | "pv-dm" | "dm" => Ok(Mode::Pvdm),
            "pvdbow" | "pv-dbow" | "dbow" => Ok(Mode::Pvdbow),
            other => Err(Error::invalid(format!("unknown training mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    /// Maximum context radius; the radius used at each position is drawn
    /// uniformly from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample_t: f64,
    pub min_count: u64,
    pub mode: Mode,
    pub seed: u64,
    pub workers: usize,
    /// Gradient passes over a document when inferring its vector.
    pub infer_steps: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 20,
            lr_initial: 0.025,
            lr_final: 0.0001,
            subsample_t: 1e-4,
            min_count: 5,
            mode: Mode::Pvdm,
            seed: 1,
            workers: 1,
            infer_steps: 50,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if !(self.lr_final > 0.0 && self.lr_initial >= self.lr_final) {
            return bad("learning rates must satisfy lr_initial >= lr_final > 0");
        }
        if !(self.subsample_t >= 0.0) {
            return bad("subsample_t must be non-negative");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Learning rate after `progress` ∈ [0, 1] of the schedule.
    pub fn lr_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.lr_initial - (self.lr_initial - self.lr_final) * p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVectors {
    pub ids: Vec<String>,
    /// Row of each document's label in [`LabelVectors`].
    pub labels: Vec<u32>,
    pub vectors: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelVectors {
    pub names: Vec<String>,
    pub vectors: Matrix,
}

impl LabelVectors {
    pub fn get(&self, name: &str) -> Option<&[f32]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vectors.row(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    /// Input word vectors, V × dim.
    pub word_in: Matrix,
    /// Negative-sampling output weights, V × dim.
    pub word_out: Matrix,
    pub docs: Option<DocVectors>,
    pub labels: Option<LabelVectors>,
    pub hyper: Hyperparams,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.word_in.cols()
    }

    pub fn word_vector(&self, token: &str) -> Option<&[f32]> {
        self.vocab.get(token).map(|i| self.word_in.row(i))
    }

    pub fn doc_vector(&self, id: &str) -> Option<&[f32]> {
        let docs = self.docs.as_ref()?;
        docs.ids
            .iter()
            .position(|d| d == id)
            .map(|i| docs.vectors.row(i))
    }

    pub fn is_finite(&self) -> bool {
        self.word_in.is_finite()
            && self.word_out.is_finite()
            && self.docs.as_ref().is_none_or(|d| d.vectors.is_finite())
            && self.labels.as_ref().is_none_or(|l| l.vectors.is_finite())
    }
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean negative-sampling loss per example, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    pub epoch_examples: Vec<u64>,
}
