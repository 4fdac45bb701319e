use rand::Rng;

use super::Vocabulary;

const POWER: f64 = 0.75;

/// Noise distribution p(w) ∝ f(w)^0.75, sampled in O(1) with Walker's alias
/// method.
#[derive(Debug, Clone)]
pub struct NegativeTable {
    probs: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_freqs(vocab.freqs())
    }

    pub fn from_freqs(freqs: &[u64]) -> Self {
        assert!(!freqs.is_empty(), "negative table over an empty vocabulary");
        let weights: Vec<f64> = freqs.iter().map(|&f| (f as f64).powf(POWER)).collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();

        let n = probs.len();
        let mut accept: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| accept[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            accept[l] -= 1.0 - accept[s];
            if accept[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            accept[i] = 1.0;
        }
        NegativeTable {
            probs,
            accept,
            alias,
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.probs.len());
        if rng.random::<f64>() < self.accept[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}
