//! Word vectors (skip-gram, CBOW) and paragraph vectors (PV-DM, PV-DBOW)
//! with jointly learned label vectors, all trained with negative sampling.

mod infer;
mod model;
mod negative;
pub mod objective;
mod serialize;
pub mod store;
mod train;
mod vocab;

pub use infer::{infer_doc_vector, Inferrer};
pub use model::{DocVectors, EmbeddingModel, Hyperparams, LabelVectors, Mode, TrainStats};
pub use negative::NegativeTable;
pub use serialize::{
    decode_model, encode_model, load_model, read_word2vec_text, save_model, write_word2vec_text,
    WordVectors, FORMAT_VERSION, MAGIC,
};
pub use store::{cosine, Matrix};
pub use train::{subsample_keep_prob, train_doc2vec, train_word2vec};
pub use vocab::Vocabulary;

/// Build a vocabulary from a tokenized corpus.
pub fn build_vocab(corpus: &crate::corpus::Corpus, min_count: u64) -> crate::Result<Vocabulary> {
    Vocabulary::build(corpus, min_count)
}

pub fn build_negative_table(vocab: &Vocabulary) -> NegativeTable {
    NegativeTable::new(vocab)
}
