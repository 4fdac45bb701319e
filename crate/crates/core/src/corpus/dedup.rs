//! Exact near-duplicate removal over token 3-shingles.
//!
//! Candidate pairs come from prefix filtering: shingles are ranked globally
//! from rarest to most common, and two sets with Jaccard >= t must share at
//! least one element among the first `|s| - ceil(t * |s|) + 1` ranked shingles
//! of each. Every candidate is then verified with the exact Jaccard, so the
//! output equals an all-pairs scan.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tokenize, Corpus, Document};
use crate::error::{Error, Result};

pub const SHINGLE_SIZE: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    pub removed_ids: Vec<String>,
    pub kept_for: BTreeMap<String, String>,
    pub threshold: f64,
}

/// Distinct shingles of a token sequence. Sequences shorter than the shingle
/// size form a single shingle; an empty sequence has none.
pub fn shingles(tokens: &[String]) -> Vec<String> {
    let mut out: Vec<String> = if tokens.is_empty() {
        Vec::new()
    } else if tokens.len() < SHINGLE_SIZE {
        vec![tokens.join("\u{1f}")]
    } else {
        tokens
            .windows(SHINGLE_SIZE)
            .map(|w| w.join("\u{1f}"))
            .collect()
    };
    out.sort_unstable();
    out.dedup();
    out
}

/// Jaccard similarity of two sorted, deduplicated slices. Two empty sets are
/// identical (similarity 1).
pub fn jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn intersection_size<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn dedup(corpus: &Corpus, threshold: f64) -> Result<(Corpus, DedupReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "dedup threshold {threshold} outside [0, 1]"
        )));
    }
    let docs = corpus.documents();
    let n = docs.len();

    let sets = interned_shingle_sets(docs);
    let mut uf = UnionFind::new(n);
    if threshold == 0.0 {
        // Every pair satisfies J >= 0.
        for i in 1..n {
            uf.union(0, i);
        }
    } else {
        for (a, b) in similar_pairs(&sets, threshold) {
            uf.union(a, b);
        }
    }

    let mut kept = Vec::new();
    let mut report = DedupReport {
        removed_ids: Vec::new(),
        kept_for: BTreeMap::new(),
        threshold,
    };
    for (i, doc) in docs.iter().enumerate() {
        let root = uf.find(i);
        if root == i {
            kept.push(doc.clone());
        } else {
            report.removed_ids.push(doc.id.clone());
            report.kept_for.insert(doc.id.clone(), docs[root].id.clone());
        }
    }
    let out = Corpus::from_valid(kept, corpus.provenance().to_string());
    Ok((out, report))
}

/// Shingle sets as sorted ids, where ids are ranked by ascending document
/// frequency (rarest first, ties by first appearance).
fn interned_shingle_sets(docs: &[Document]) -> Vec<Vec<u32>> {
    let raw: Vec<Vec<String>> = docs
        .par_iter()
        .map(|d| {
            if d.tokens.is_empty() && !d.text.is_empty() {
                shingles(&tokenize(&d.text))
            } else {
                shingles(&d.tokens)
            }
        })
        .collect();

    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut df: Vec<u32> = Vec::new();
    for set in &raw {
        for s in set {
            let next = ids.len() as u32;
            let id = *ids.entry(s.as_str()).or_insert(next);
            if id as usize == df.len() {
                df.push(0);
            }
            df[id as usize] += 1;
        }
    }
    let mut order: Vec<u32> = (0..df.len() as u32).collect();
    order.sort_by_key(|&id| (df[id as usize], id));
    let mut rank = vec![0u32; df.len()];
    for (r, &id) in order.iter().enumerate() {
        rank[id as usize] = r as u32;
    }

    raw.iter()
        .map(|set| {
            let mut v: Vec<u32> = set.iter().map(|s| rank[ids[s.as_str()] as usize]).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn prefix_len(size: usize, threshold: f64) -> usize {
    let required = ((threshold * size as f64) - 1e-9).ceil().max(1.0) as usize;
    (size + 1).saturating_sub(required).min(size)
}

/// All pairs (j, i), j < i, with Jaccard >= threshold, for threshold > 0.
fn similar_pairs(sets: &[Vec<u32>], threshold: f64) -> Vec<(usize, usize)> {
    let mut postings: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut empties = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() {
            empties.push(i);
        }
        for &s in &set[..prefix_len(set.len(), threshold)] {
            postings.entry(s).or_default().push(i);
        }
    }

    let mut pairs: Vec<(usize, usize)> = (0..sets.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let set = &sets[i];
            let mut cands: Vec<usize> = set[..prefix_len(set.len(), threshold)]
                .iter()
                .flat_map(|s| postings[s].iter().copied().take_while(|&j| j < i))
                .collect();
            cands.sort_unstable();
            cands.dedup();
            cands
                .into_iter()
                .filter(|&j| jaccard(&sets[j], set) >= threshold)
                .map(|j| (j, i))
                .collect::<Vec<_>>()
        })
        .collect();

    // Empty token sequences are mutual duplicates.
    pairs.extend(empties.windows(2).map(|w| (w[0], w[1])));
    pairs
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// The smaller index becomes the root, so each component is represented
    /// by its first-ingested document.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
