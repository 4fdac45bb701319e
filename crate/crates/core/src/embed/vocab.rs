use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Token index with exact corpus frequencies. Indices are dense and ordered by
/// descending frequency, ties broken by token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    pub fn build(corpus: &Corpus, min_count: u64) -> Result<Self> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in corpus.documents() {
            for t in &doc.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary(min_count));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_counts(
            kept.into_iter().map(|(t, c)| (t.to_string(), c)).collect(),
            min_count,
        ))
    }

    /// Assemble from (token, frequency) pairs in index order.
    pub fn from_counts(entries: Vec<(String, u64)>, min_count: u64) -> Self {
        let total_tokens = entries.iter().map(|(_, c)| c).sum();
        let (tokens, freqs): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let mut v = Vocabulary {
            tokens,
            freqs,
            index: HashMap::new(),
            total_tokens,
            min_count,
        };
        v.reindex();
        v
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn freq(&self, i: usize) -> u64 {
        self.freqs[i]
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// In-vocabulary token ids, OOV tokens skipped.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens
            .iter()
            .filter_map(|t| self.index.get(t.as_str()).copied())
            .collect()
    }
}
