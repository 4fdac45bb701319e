//! Multinomial logistic regression on unit-normalized document vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::predict::Prediction;
use crate::embed::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<String>,
    /// C × dim.
    pub weights: Matrix<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            epochs: 300,
            lr: 1.0,
            l2: 1e-4,
        }
    }
}

/// Training inputs after unit normalization, with class indices.
#[derive(Debug, Clone)]
pub struct LinearData {
    pub xs: Matrix<f64>,
    pub ys: Vec<usize>,
}

impl LinearData {
    pub fn new(vectors: &Matrix, ys: Vec<usize>) -> Self {
        let mut xs = Matrix::zeros(vectors.rows(), vectors.cols());
        for i in 0..vectors.rows() {
            unit_into(vectors.row(i), xs.row_mut(i));
        }
        LinearData { xs, ys }
    }
}

fn unit_into(src: &[f32], dst: &mut [f64]) {
    let n = src.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
    for (d, s) in dst.iter_mut().zip(src) {
        *d = if n > 0.0 { f64::from(*s) / n } else { 0.0 };
    }
}

fn softmax_into(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

impl LinearModel {
    pub fn zeros(classes: Vec<String>, dim: usize) -> Self {
        let c = classes.len();
        LinearModel {
            classes,
            weights: Matrix::zeros(c, dim),
            bias: vec![0.0; c],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }

    fn probs_unit(&self, x: &[f64]) -> Vec<f64> {
        let mut logits: Vec<f64> = self
            .weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect();
        softmax_into(&mut logits);
        logits
    }

    /// Class probabilities for a raw (unnormalized) vector.
    pub fn probabilities(&self, v: &[f32]) -> Vec<f64> {
        let mut x = vec![0.0; v.len()];
        unit_into(v, &mut x);
        self.probs_unit(&x)
    }

    pub fn predict(&self, doc_id: &str, v: &[f32]) -> Result<Prediction> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has {} dimensions, model expects {}",
                v.len(),
                self.dim()
            )));
        }
        let scores = self
            .classes
            .iter()
            .cloned()
            .zip(self.probabilities(v))
            .collect::<BTreeMap<_, _>>();
        Prediction::from_scores(doc_id, scores)
    }

    /// Mean cross-entropy plus `l2 / 2 · ‖W‖²`; the bias is not penalized.
    pub fn loss(&self, data: &LinearData, l2: f64) -> f64 {
        let n = data.ys.len().max(1) as f64;
        let ce: f64 = data
            .xs
            .iter_rows()
            .zip(&data.ys)
            .map(|(x, &y)| -self.probs_unit(x)[y].max(f64::MIN_POSITIVE).ln())
            .sum();
        let reg: f64 = self.weights.as_slice().iter().map(|w| w * w).sum();
        ce / n + 0.5 * l2 * reg
    }

    /// Gradient of [`LinearModel::loss`] with respect to weights and bias.
    pub fn gradient(&self, data: &LinearData, l2: f64) -> (Matrix<f64>, Vec<f64>) {
        let c = self.classes.len();
        let n = data.ys.len().max(1) as f64;
        let mut gw = Matrix::zeros(c, self.dim());
        let mut gb = vec![0.0; c];
        for (x, &y) in data.xs.iter_rows().zip(&data.ys) {
            let p = self.probs_unit(x);
            for k in 0..c {
                let e = (p[k] - if k == y { 1.0 } else { 0.0 }) / n;
                gb[k] += e;
                for (g, xi) in gw.row_mut(k).iter_mut().zip(x) {
                    *g += e * xi;
                }
            }
        }
        for (g, w) in gw.as_mut_slice().iter_mut().zip(self.weights.as_slice()) {
            *g += l2 * w;
        }
        (gw, gb)
    }
}

/// Fit by full-batch gradient descent from zero weights. With unit inputs the
/// loss gradient is `(1 + l2)`-Lipschitz, so the step is capped at
/// `1 / (1 + l2)` and every epoch is a descent step.
pub fn train_linear(
    vectors: &Matrix,
    labels: &[String],
    config: &LinearConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    if vectors.rows() != labels.len() {
        return Err(Error::invalid("one label per training vector required"));
    }
    if !(config.lr > 0.0) || !(config.l2 >= 0.0) {
        return Err(Error::invalid("lr must be positive and l2 non-negative"));
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "linear model needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    let ys = labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    let data = LinearData::new(vectors, ys);
    let mut model = LinearModel::zeros(classes, vectors.cols());
    let step = config.lr.min(1.0 / (1.0 + config.l2));
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (gw, gb) = model.gradient(&data, config.l2);
        for (w, g) in model.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *w -= step * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&gb) {
            *b -= step * g;
        }
        losses.push(model.loss(&data, config.l2));
    }
    Ok((model, losses))
}
