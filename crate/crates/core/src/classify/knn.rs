use std::collections::BTreeMap;

use super::predict::Prediction;
use crate::embed::{cosine, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 25;

/// Labeled training vectors for nearest-neighbour search.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    vectors: Matrix,
    labels: Vec<String>,
}

impl KnnIndex {
    pub fn new(vectors: Matrix, labels: Vec<String>) -> Result<Self> {
        if vectors.rows() != labels.len() {
            return Err(Error::invalid("one label per training vector required"));
        }
        Ok(KnnIndex { vectors, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Indices and cosine similarities of the `k` most similar training
    /// vectors, most similar first; equal similarities keep index order.
    pub fn neighbors(&self, query: &[f32], k: usize) -> Vec<(usize, f64)> {
        let mut sims: Vec<(usize, f64)> = self
            .vectors
            .iter_rows()
            .map(|row| cosine(query, row))
            .enumerate()
            .collect();
        let by_sim = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if k < sims.len() {
            sims.select_nth_unstable_by(k, by_sim);
            sims.truncate(k);
        }
        sims.sort_by(by_sim);
        sims
    }

    /// Majority vote over the `k` cosine-nearest training vectors. Vote ties
    /// go to the label with the larger summed similarity, then to the
    /// lexicographically smaller label.
    ///
    /// Scores are `votes / k` plus the label's summed similarity divided by
    /// `k * (2k + 2)`. The second term lies strictly within half a vote, so
    /// the arg-max of the scores is the vote winner with the tie rule above.
    pub fn classify(&self, doc_id: &str, query: &[f32], k: usize) -> Result<Prediction> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if k > self.len() {
            return Err(Error::invalid(format!(
                "K = {k} exceeds the {} training vectors",
                self.len()
            )));
        }
        let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for (i, sim) in self.neighbors(query, k) {
            let e = tally.entry(self.labels[i].as_str()).or_default();
            e.0 += 1;
            e.1 += sim;
        }
        let kf = k as f64;
        let scores = tally
            .into_iter()
            .map(|(l, (votes, sim))| {
                (l.to_string(), votes as f64 / kf + sim / (kf * (2.0 * kf + 2.0)))
            })
            .collect();
        Prediction::from_scores(doc_id, scores)
    }
}

pub fn knn_classify(index: &KnnIndex, query: &[f32], k: usize) -> Result<Prediction> {
    index.classify("", query, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_of_three() {
        let idx = KnnIndex::new(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.8, 0.3], vec![-1.0, 0.0]]),
            vec!["A".into(), "A".into(), "B".into(), "B".into()],
        )
        .unwrap();
        assert_eq!(idx.classify("q", &[1.0, 0.05], 3).unwrap().predicted_label, "A");
    }

    #[test]
    fn self_neighbor() {
        let idx = KnnIndex::new(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![-2.0, 1.0], vec![0.5, -1.0]]),
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        assert_eq!(idx.classify("q", &[-2.0, 1.0], 1).unwrap().predicted_label, "y");
    }

    #[test]
    fn vote_tie_uses_similarity() {
        let idx = KnnIndex::new(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8], vec![0.8, -0.6]]),
            vec!["b".into(), "a".into(), "a".into(), "b".into()],
        )
        .unwrap();
        // Two votes each; "b" neighbours are closer in sum to (1, 0.1).
        let p = idx.classify("q", &[1.0, 0.1], 4).unwrap();
        assert_eq!(p.predicted_label, "b");
    }

    #[test]
    fn bad_k() {
        let idx = KnnIndex::new(Matrix::from_rows(&[vec![1.0]]), vec!["a".into()]).unwrap();
        assert!(idx.classify("q", &[1.0], 0).is_err());
        assert!(idx.classify("q", &[1.0], 2).is_err());
    }
}
