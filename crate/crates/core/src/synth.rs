//! Seeded synthetic labeled corpora.
//!
//! Each class draws tokens from its own vocabulary of `vocab_per_class`
//! types: `round(overlap_fraction · vocab_per_class)` of them come from a pool
//! shared by every class, the rest are unique to the class. Token frequencies
//! follow Zipf's law (exponent 1) over a class-specific random ranking of the
//! class vocabulary. Documents rated 4 or 5 additionally carry tokens from a
//! popularity marker vocabulary, which no class vocabulary contains.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub docs_per_class: usize,
    pub vocab_per_class: usize,
    /// Share of each class vocabulary taken from the common pool, in [0, 1).
    pub overlap_fraction: f64,
    pub seed: u64,
    /// Inclusive document length range in tokens.
    pub min_len: usize,
    pub max_len: usize,
    pub marker_vocab: usize,
    /// Probability that a token of a highly rated document is a marker.
    pub marker_rate: f64,
    /// The last `high_only_classes` classes receive only ratings 4 and 5.
    pub high_only_classes: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 8,
            docs_per_class: 1250,
            vocab_per_class: 500,
            overlap_fraction: 0.5,
            seed: 1,
            min_len: 50,
            max_len: 300,
            marker_vocab: 20,
            marker_rate: 0.2,
            high_only_classes: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.classes == 0 || self.docs_per_class == 0 || self.vocab_per_class == 0 {
            return bad("classes, docs_per_class and vocab_per_class must be positive".into());
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return bad(format!(
                "overlap_fraction {} must lie in [0, 1)",
                self.overlap_fraction
            ));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!(
                "document length range {}..={} is empty or starts at 0",
                self.min_len, self.max_len
            ));
        }
        if !(0.0..=1.0).contains(&self.marker_rate) {
            return bad(format!("marker_rate {} must lie in [0, 1]", self.marker_rate));
        }
        if self.marker_rate > 0.0 && self.marker_vocab == 0 {
            return bad("marker_rate > 0 needs a nonempty marker vocabulary".into());
        }
        if self.high_only_classes > self.classes {
            return bad("high_only_classes exceeds classes".into());
        }
        Ok(())
    }
}

/// Vocabulary layout of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthVocab {
    pub shared: Vec<String>,
    /// Class name -> class vocabulary, most frequent rank first.
    pub classes: BTreeMap<String, Vec<String>>,
    pub markers: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub vocab: SynthVocab,
}

pub fn class_name(c: usize, classes: usize) -> String {
    let width = classes.saturating_sub(1).to_string().len();
    format!("genre{c:0width$}")
}

/// Generate labeled, rated documents, class by class. Identical configs
/// produce identical corpora.
pub fn gen_synthetic(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let v = config.vocab_per_class;
    let n_shared = (config.overlap_fraction * v as f64).round() as usize;
    let shared: Vec<String> = (0..n_shared).map(|i| format!("s{i}")).collect();
    let markers: Vec<String> = (0..config.marker_vocab).map(|i| format!("pop{i}")).collect();
    let zipf = Zipf::new(v as f64, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut vocab = SynthVocab {
        shared: shared.clone(),
        classes: BTreeMap::new(),
        markers: markers.clone(),
    };
    let mut docs = Vec::with_capacity(config.classes * config.docs_per_class);
    for c in 0..config.classes {
        let name = class_name(c, config.classes);
        let mut rng = seed::rng_for(config.seed, c as u64);
        let mut types: Vec<String> = shared.clone();
        types.extend((0..v - n_shared).map(|i| format!("c{c}w{i}")));
        types.shuffle(&mut rng);
        let high_only = c >= config.classes - config.high_only_classes;
        for d in 0..config.docs_per_class {
            let rating: u8 = if high_only {
                rng.random_range(4..=5)
            } else {
                rng.random_range(1..=5)
            };
            let len = rng.random_range(config.min_len..=config.max_len);
            let mut tokens: Vec<&str> = Vec::with_capacity(len);
            for _ in 0..len {
                if rating >= 4 && config.marker_rate > 0.0 && rng.random_bool(config.marker_rate) {
                    tokens.push(&markers[rng.random_range(0..markers.len())]);
                } else {
                    let rank = zipf.sample(&mut rng) as usize;
                    tokens.push(&types[rank - 1]);
                }
            }
            docs.push(
                Document::new(format!("{name}-{d:05}"), tokens.join(" "))
                    .with_label(name.clone())
                    .with_rating(rating)
                    .tokenized(),
            );
        }
        vocab.classes.insert(name, types);
    }
    let provenance = format!(
        "synthetic classes={} docs_per_class={} vocab_per_class={} overlap={} seed={}",
        config.classes, config.docs_per_class, v, config.overlap_fraction, config.seed
    );
    Ok(SynthCorpus {
        corpus: Corpus::new(docs, provenance)?,
        vocab,
    })
}
