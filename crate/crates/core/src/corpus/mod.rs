//! Labeled text corpora: ingestion, normalization, near-duplicate removal and
//! the seeded sampling procedures used to build balanced experiment datasets.

mod dedup;
mod io;
mod sampling;
mod tokenize;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dedup::{dedup, jaccard, shingles, DedupReport, DEFAULT_THRESHOLD, SHINGLE_SIZE};
pub use io::{ingest, read_corpus, write_jsonl, Format};
pub use sampling::{
    binarize_popularity, sample_to_size, split, undersample, DatasetVersion, HIGH_POPULARITY,
    LOW_POPULARITY,
};
pub use tokenize::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(skip)]
    pub tokens: Vec<String>,
    #[serde(rename = "genre", default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            tokens: Vec::new(),
            label: None,
            rating: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_rating(mut self, rating: u8) -> Self {
        self.rating = Some(rating);
        self
    }

    /// Fill `tokens` from `text`.
    pub fn tokenize(&mut self) {
        self.tokens = tokenize(&self.text);
    }

    pub fn tokenized(mut self) -> Self {
        self.tokenize();
        self
    }
}

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    label_set: BTreeSet<String>,
    provenance: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if let Some(r) = doc.rating {
                if !(1..=5).contains(&r) {
                    return Err(Error::invalid(format!(
                        "document `{}` has rating {r}, expected 1-5",
                        doc.id
                    )));
                }
            }
        }
        Ok(Self::from_valid(documents, provenance.into()))
    }

    /// Build from documents already known to satisfy the corpus invariants
    /// (a subset of a valid corpus, for example).
    pub(crate) fn from_valid(documents: Vec<Document>, provenance: String) -> Self {
        let label_set = documents.iter().filter_map(|d| d.label.clone()).collect();
        Corpus {
            documents,
            label_set,
            provenance,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Tokenize every document in place.
    pub fn tokenize(&mut self) {
        for doc in &mut self.documents {
            doc.tokenize();
        }
    }

    pub fn tokenized(mut self) -> Self {
        self.tokenize();
        self
    }

    /// Total UTF-8 size of all document texts.
    pub fn text_bytes(&self) -> usize {
        self.documents.iter().map(|d| d.text.len()).sum()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    /// Documents whose id is in `ids`, in the order of `ids`.
    pub fn select(&self, ids: &[String], provenance: impl Into<String>) -> Result<Corpus> {
        let index: std::collections::HashMap<&str, &Document> =
            self.documents.iter().map(|d| (d.id.as_str(), d)).collect();
        let docs = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|d| (*d).clone())
                    .ok_or_else(|| Error::invalid(format!("unknown document id `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(docs, provenance)
    }

    /// Concatenate corpora, keeping the first corpus' documents first.
    pub fn concat(parts: Vec<Corpus>) -> Result<Corpus> {
        let provenance = parts
            .iter()
            .map(|c| c.provenance.as_str())
            .collect::<Vec<_>>()
            .join(" + ");
        let docs = parts.into_iter().flat_map(|c| c.documents).collect();
        Corpus::new(docs, provenance)
    }
}
