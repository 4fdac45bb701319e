use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbeddingModel, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub predicted_label: String,
    pub scores: BTreeMap<String, f64>,
}

impl Prediction {
    /// Highest score wins; exact ties go to the lexicographically smallest
    /// label (BTreeMap iteration order).
    pub fn from_scores(doc_id: impl Into<String>, scores: BTreeMap<String, f64>) -> Result<Self> {
        let mut best: Option<(&String, f64)> = None;
        for (label, &s) in &scores {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((label, s));
            }
        }
        let predicted_label = best
            .map(|(l, _)| l.clone())
            .ok_or_else(|| Error::invalid("no classes to predict from"))?;
        Ok(Prediction {
            doc_id: doc_id.into(),
            predicted_label,
            scores,
        })
    }
}

pub(crate) fn is_zero(v: &[f32]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

/// Label whose learned vector is most cosine-similar to `doc_vec`.
pub fn label_vector_classify(model: &EmbeddingModel, doc_vec: &[f32]) -> Result<Prediction> {
    let labels = model
        .labels
        .as_ref()
        .ok_or_else(|| Error::Model("model has no label vectors".into()))?;
    label_vectors_classify("", &labels.names, &labels.vectors, doc_vec)
}

pub fn label_vectors_classify(
    doc_id: &str,
    names: &[String],
    vectors: &Matrix,
    doc_vec: &[f32],
) -> Result<Prediction> {
    if is_zero(doc_vec) {
        return Err(Error::invalid("zero document vector"));
    }
    if doc_vec.len() != vectors.cols() {
        return Err(Error::invalid(format!(
            "document vector has {} dimensions, label vectors {}",
            doc_vec.len(),
            vectors.cols()
        )));
    }
    let scores = names
        .iter()
        .zip(vectors.iter_rows())
        .map(|(n, v)| (n.clone(), cosine(doc_vec, v)))
        .collect();
    Prediction::from_scores(doc_id, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn two_axes() -> (Vec<String>, Matrix) {
        (
            names(&["g1", "g2"]),
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
        )
    }

    #[test]
    fn nearest_axis() {
        let (n, m) = two_axes();
        let p = label_vectors_classify("d", &n, &m, &[0.9, 0.1]).unwrap();
        assert_eq!(p.predicted_label, "g1");
    }

    #[test]
    fn exact_label_vector() {
        let (n, m) = two_axes();
        let p = label_vectors_classify("d", &n, &m, &[0.0, 1.0]).unwrap();
        assert_eq!(p.predicted_label, "g2");
        assert!((p.scores["g2"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_goes_to_smaller_label() {
        let n = names(&["zeta", "alpha"]);
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = label_vectors_classify("d", &n, &m, &[1.0, 1.0]).unwrap();
        assert_eq!(p.predicted_label, "alpha");
    }

    #[test]
    fn zero_vector_rejected() {
        let (n, m) = two_axes();
        assert!(label_vectors_classify("d", &n, &m, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn scale_invariant() {
        let n = names(&["a", "b", "c"]);
        let m = Matrix::from_rows(&[vec![1.0, 0.2, -0.3], vec![0.1, 0.9, 0.4], vec![-0.5, 0.5, 0.7]]);
        let v = [0.3f32, 0.6, -0.1];
        let base = label_vectors_classify("d", &n, &m, &v).unwrap().predicted_label;
        for alpha in [1e-3f32, 0.5, 7.0, 1e4] {
            let scaled: Vec<f32> = v.iter().map(|x| x * alpha).collect();
            assert_eq!(label_vectors_classify("d", &n, &m, &scaled).unwrap().predicted_label, base);
        }
    }
}
