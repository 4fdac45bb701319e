//! Distributed representations of documents, words and class labels.
//!
//! - [`corpus`]: ingestion, tokenization, near-duplicate removal, balanced
//!   seeded dataset versions.
//! - [`embed`]: skip-gram / CBOW word vectors and PV-DM / PV-DBOW paragraph
//!   vectors with one jointly trained vector per class label.
//! - [`classify`]: label-vector, KNN and softmax-regression classifiers and
//!   the genre and popularity experiment pipelines.
//! - [`eval`]: confusion matrices, per-class F1 and word-analogy accuracy.
//! - [`synth`]: seeded Zipfian corpora with controllable class overlap.

pub mod classify;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod seed;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
