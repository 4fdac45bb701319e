use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document};
use crate::error::{Error, Result};
use crate::seed;

pub const LOW_POPULARITY: &str = "low";
pub const HIGH_POPULARITY: &str = "high";

/// One seeded, stratified train/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetVersion {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// label -> (train count, test count)
    pub per_class_counts: BTreeMap<String, (usize, usize)>,
}

fn by_class(docs: &[Document]) -> BTreeMap<&str, Vec<usize>> {
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        if let Some(l) = &d.label {
            classes.entry(l.as_str()).or_default().push(i);
        }
    }
    classes
}

/// Keep exactly `per_class` labeled documents of every class, drawn uniformly
/// without replacement. Unlabeled documents are dropped; the survivors keep
/// their corpus order.
pub fn undersample(corpus: &Corpus, per_class: usize, seed: u64) -> Result<Corpus> {
    let docs = corpus.documents();
    let classes = by_class(docs);
    if let Some((class, members)) = classes.iter().find(|(_, m)| m.len() < per_class) {
        return Err(Error::InsufficientClass {
            class: class.to_string(),
            available: members.len(),
            required: per_class,
        });
    }
    let mut keep = vec![false; docs.len()];
    for (class, members) in &classes {
        let mut rng = seed::rng_for(seed, seed::hash_str(class));
        let mut members = members.clone();
        members.shuffle(&mut rng);
        for &i in &members[..per_class] {
            keep[i] = true;
        }
    }
    let selected = docs
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(d, _)| d.clone())
        .collect();
    Ok(Corpus::from_valid(selected, corpus.provenance().to_string()))
}

/// Per-class stratified split. Each class contributes
/// `round((1 - train_fraction) * n)` test documents, clamped so both sides
/// get at least one.
pub fn split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<DatasetVersion> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let docs = corpus.documents();
    let mut version = DatasetVersion {
        seed,
        train: Vec::new(),
        test: Vec::new(),
        per_class_counts: BTreeMap::new(),
    };
    let mut is_test = vec![None; docs.len()];
    for (class, members) in by_class(docs) {
        let n = members.len();
        if n < 2 {
            return Err(Error::InsufficientClass {
                class: class.to_string(),
                available: n,
                required: 2,
            });
        }
        let test_n = (((1.0 - train_fraction) * n as f64).round() as usize).clamp(1, n - 1);
        let mut rng = seed::rng_for(seed, seed::hash_str(class) ^ 0x5311_7000);
        let mut members = members;
        members.shuffle(&mut rng);
        for (rank, &i) in members.iter().enumerate() {
            is_test[i] = Some(rank < test_n);
        }
        version
            .per_class_counts
            .insert(class.to_string(), (n - test_n, test_n));
    }
    for (doc, flag) in docs.iter().zip(is_test) {
        match flag {
            Some(true) => version.test.push(doc.id.clone()),
            Some(false) => version.train.push(doc.id.clone()),
            None => {}
        }
    }
    Ok(version)
}

/// Relabel rated documents as low (1-3) or high (4-5) popularity, drop
/// unrated ones, and undersample the larger class to the size of the smaller.
pub fn binarize_popularity(corpus: &Corpus, seed: u64) -> Result<Corpus> {
    let relabeled: Vec<Document> = corpus
        .documents()
        .iter()
        .filter_map(|d| {
            let label = match d.rating? {
                1..=3 => LOW_POPULARITY,
                _ => HIGH_POPULARITY,
            };
            let mut d = d.clone();
            d.label = Some(label.to_string());
            Some(d)
        })
        .collect();
    let relabeled = Corpus::from_valid(relabeled, corpus.provenance().to_string());
    let low = relabeled
        .documents()
        .iter()
        .filter(|d| d.label.as_deref() == Some(LOW_POPULARITY))
        .count();
    let high = relabeled.len() - low;
    let smaller = if low == 0 || high == 0 { 0 } else { low.min(high) };
    if smaller == 0 {
        return Ok(Corpus::from_valid(Vec::new(), corpus.provenance().to_string()));
    }
    undersample(&relabeled, smaller, seed)
}

/// Draw documents in seeded random order until the cumulative text size first
/// reaches `target_bytes`.
pub fn sample_to_size(corpus: &Corpus, target_bytes: usize, seed: u64) -> Result<Corpus> {
    let total = corpus.text_bytes();
    if total < target_bytes {
        return Err(Error::CorpusTooSmall(format!(
            "corpus holds {total} bytes of text, {target_bytes} requested"
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    let docs = corpus.documents();
    let mut taken = Vec::new();
    let mut size = 0usize;
    for i in order {
        if size >= target_bytes {
            break;
        }
        size += docs[i].text.len();
        taken.push(docs[i].clone());
    }
    Ok(Corpus::from_valid(taken, corpus.provenance().to_string()))
}
