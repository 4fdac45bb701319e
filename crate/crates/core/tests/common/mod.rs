//! Independent oracles shared by the integration tests and the acceptance
//! suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use lyricvec::classify::{LinearData, LinearModel};
use lyricvec::corpus::{Corpus, Document};
use lyricvec::embed::objective::{example_loss, sgd_step, Input, Scratch, Tables};
use lyricvec::embed::{Matrix, Mode, WordVectors};
use lyricvec::eval::{parse_analogies, AnalogySet};
use lyricvec::seed;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub type F64Tables = Tables<Matrix<f64>, Matrix<f64>, Matrix<f64>, Matrix<f64>>;

pub const FD_STEP: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(FD_FLOOR)
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-0.6..0.6)).collect();
    Matrix::from_vec(rows, cols, data)
}

fn tables_params(t: &mut F64Tables) -> [&mut Matrix<f64>; 4] {
    [&mut t.words, &mut t.docs, &mut t.labels, &mut t.output]
}

/// Largest relative error between the update applied by `sgd_step` (learning
/// rate 1) and central differences of `example_loss`, over every parameter.
pub fn check_example(
    tables: &F64Tables,
    inputs: &[Input],
    target: usize,
    negatives: &[usize],
    dim: usize,
) -> f64 {
    let mut stepped = Tables {
        words: tables.words.clone(),
        docs: tables.docs.clone(),
        labels: tables.labels.clone(),
        output: tables.output.clone(),
    };
    sgd_step(&mut stepped, inputs, target, negatives, 1.0, &mut Scratch::new(dim));
    let mut probe = Tables {
        words: tables.words.clone(),
        docs: tables.docs.clone(),
        labels: tables.labels.clone(),
        output: tables.output.clone(),
    };
    let before = [&tables.words, &tables.docs, &tables.labels, &tables.output];
    let after = [&stepped.words, &stepped.docs, &stepped.labels, &stepped.output];
    let mut worst = 0.0f64;
    for t in 0..4 {
        for i in 0..before[t].as_slice().len() {
            let analytic = before[t].as_slice()[i] - after[t].as_slice()[i];
            let x = before[t].as_slice()[i];
            tables_params(&mut probe)[t].as_mut_slice()[i] = x + FD_STEP;
            let up: f64 = example_loss(&probe, inputs, target, negatives, dim);
            tables_params(&mut probe)[t].as_mut_slice()[i] = x - FD_STEP;
            let down: f64 = example_loss(&probe, inputs, target, negatives, dim);
            tables_params(&mut probe)[t].as_mut_slice()[i] = x;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic, numeric));
        }
    }
    worst
}

/// One random configuration (dim ≤ 8, V ≤ 50) of a training mode's example
/// shape. Returns the worst relative gradient error.
pub fn grad_check_mode(mode: Mode, seed_value: u64) -> f64 {
    let mut rng = seed::rng(seed_value);
    let dim = rng.random_range(1..=8);
    let v = rng.random_range(8..=50);
    let n_docs = rng.random_range(1..=5);
    let n_labels = rng.random_range(1..=4);
    let tables: F64Tables = Tables {
        words: random_matrix(v, dim, &mut rng),
        docs: random_matrix(n_docs, dim, &mut rng),
        labels: random_matrix(n_labels, dim, &mut rng),
        output: random_matrix(v, dim, &mut rng),
    };
    let mut word_ids: Vec<u32> = (0..v as u32).collect();
    word_ids.shuffle(&mut rng);
    let target = rng.random_range(0..v);
    let k = rng.random_range(1..=5);
    let mut negatives: Vec<usize> = (0..v).collect();
    negatives.shuffle(&mut rng);
    negatives.truncate(k);
    let doc = Input::Doc(rng.random_range(0..n_docs) as u32);
    let label = Input::Label(rng.random_range(0..n_labels) as u32);
    let context = rng.random_range(1..=6);
    let examples: Vec<Vec<Input>> = match mode {
        Mode::SkipGram => vec![vec![Input::Word(word_ids[0])]],
        Mode::Cbow => vec![word_ids[..context].iter().map(|&w| Input::Word(w)).collect()],
        Mode::Pvdm => {
            let mut inputs = vec![doc, label];
            inputs.extend(word_ids[..context].iter().map(|&w| Input::Word(w)));
            vec![inputs]
        }
        Mode::Pvdbow => vec![vec![doc], vec![label]],
    };
    examples
        .iter()
        .map(|inputs| check_example(&tables, inputs, target, &negatives, dim))
        .fold(0.0, f64::max)
}

/// Random softmax-regression configuration; worst relative error of
/// `LinearModel::gradient` against central differences of its loss.
pub fn grad_check_softmax(seed_value: u64) -> f64 {
    let mut rng = seed::rng(seed_value);
    let dim = rng.random_range(1..=8);
    let c = rng.random_range(2..=5);
    let n = rng.random_range(1..=20);
    let l2 = rng.random_range(0.0..0.1);
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0f32)).collect())
        .collect();
    let ys = (0..n).map(|_| rng.random_range(0..c)).collect();
    let data = LinearData::new(&Matrix::from_rows(&rows), ys);
    let mut model = LinearModel::zeros((0..c).map(|i| format!("c{i}")).collect(), dim);
    for w in model.weights.as_mut_slice() {
        *w = rng.random_range(-1.0..1.0);
    }
    for b in &mut model.bias {
        *b = rng.random_range(-1.0..1.0);
    }
    let (gw, gb) = model.gradient(&data, l2);
    let mut worst = 0.0f64;
    for i in 0..gw.as_slice().len() {
        let mut probe = model.clone();
        let x = probe.weights.as_slice()[i];
        probe.weights.as_mut_slice()[i] = x + FD_STEP;
        let up = probe.loss(&data, l2);
        probe.weights.as_mut_slice()[i] = x - FD_STEP;
        let down = probe.loss(&data, l2);
        worst = worst.max(rel_err(gw.as_slice()[i], (up - down) / (2.0 * FD_STEP)));
    }
    for k in 0..c {
        let mut probe = model.clone();
        probe.bias[k] += FD_STEP;
        let up = probe.loss(&data, l2);
        probe.bias[k] -= 2.0 * FD_STEP;
        let down = probe.loss(&data, l2);
        worst = worst.max(rel_err(gb[k], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

fn oracle_shingles(tokens: &[String]) -> HashSet<String> {
    if tokens.len() < 3 {
        return std::iter::once(tokens.join(" ")).collect();
    }
    tokens.windows(3).map(|w| w.join(" ")).collect()
}

fn oracle_jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// All-pairs Jaccard over word 3-shingles; in every connected component of
/// the "similarity ≥ threshold" graph all but the earliest document go.
pub fn dedup_oracle(corpus: &Corpus, threshold: f64) -> BTreeSet<String> {
    let docs = corpus.documents();
    let sets: Vec<HashSet<String>> = docs.iter().map(|d| oracle_shingles(&d.tokens)).collect();
    let n = docs.len();
    let mut component: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if oracle_jaccard(&sets[i], &sets[j]) >= threshold {
                let (a, b) = (component[i], component[j]);
                let (lo, hi) = (a.min(b), a.max(b));
                for c in component.iter_mut() {
                    if *c == hi {
                        *c = lo;
                    }
                }
            }
        }
    }
    (0..n)
        .filter(|&i| component[i] != i)
        .map(|i| docs[i].id.clone())
        .collect()
}

pub struct PlantedDedup {
    pub corpus: Corpus,
    pub distinct: Vec<String>,
    pub exact: Vec<String>,
    pub near: Vec<String>,
}

/// `distinct` random documents followed by `exact` verbatim copies and `near`
/// copies whose last 10% of tokens are replaced, in shuffled order after
/// their sources.
pub fn planted_dedup(distinct: usize, exact: usize, near: usize, seed_value: u64) -> PlantedDedup {
    let mut rng = seed::rng(seed_value);
    let vocab: Vec<String> = (0..5000).map(|i| format!("w{i}")).collect();
    let mut docs: Vec<Vec<String>> = (0..distinct)
        .map(|_| {
            let len = rng.random_range(60..=120);
            (0..len).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect()
        })
        .collect();
    let mut plants: Vec<(bool, Vec<String>)> = Vec::new();
    for _ in 0..exact {
        plants.push((true, docs[rng.random_range(0..distinct)].clone()));
    }
    for _ in 0..near {
        let mut d = docs[rng.random_range(0..distinct)].clone();
        let m = d.len() / 10;
        let n = d.len();
        for t in &mut d[n - m..] {
            *t = format!("fresh{}", rng.random_range(0..1_000_000));
        }
        plants.push((false, d));
    }
    plants.shuffle(&mut rng);
    let mut out = PlantedDedup {
        corpus: Corpus::new(Vec::new(), "").unwrap(),
        distinct: (0..distinct).map(|i| format!("d{i:04}")).collect(),
        exact: Vec::new(),
        near: Vec::new(),
    };
    for (i, (is_exact, d)) in plants.into_iter().enumerate() {
        let id = format!("p{i:04}");
        if is_exact {
            out.exact.push(id);
        } else {
            out.near.push(id);
        }
        docs.push(d);
    }
    let mut all_ids: Vec<String> = out.distinct.clone();
    all_ids.extend((0..exact + near).map(|i| format!("p{i:04}")));
    let documents = all_ids
        .into_iter()
        .zip(docs)
        .map(|(id, tokens)| Document::new(id, tokens.join(" ")).tokenized())
        .collect();
    out.corpus = Corpus::new(documents, "planted").unwrap();
    out
}

/// Embedding with exact analogy offsets: per category `k` and pair `i`,
/// `x_i = (u_i + p_k) / √2` and `y_i = (u_i + q_k) / √2` over orthonormal
/// `u`, `p`, `q`, so `y_i - x_i + x_j = y_j` holds exactly. Each category
/// asks all 20 ordered pairs of its 5 word pairs.
pub fn exact_analogy_fixture() -> (WordVectors, AnalogySet) {
    let categories = 14;
    let pairs = 5;
    let dim = categories * pairs + 2 * categories;
    let s = std::f32::consts::FRAC_1_SQRT_2;
    let mut tokens = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    for k in 0..categories {
        for i in 0..pairs {
            let u = k * pairs + i;
            let p = categories * pairs + 2 * k;
            for (name, off) in [(format!("c{k}x{i}"), p), (format!("c{k}y{i}"), p + 1)] {
                let mut row = vec![0.0f32; dim];
                row[u] = s;
                row[off] = s;
                tokens.push(name);
                rows.push(row);
            }
        }
        text.push_str(&format!(": category-{k}\n"));
        for i in 0..pairs {
            for j in 0..pairs {
                if i != j {
                    text.push_str(&format!("c{k}x{i} c{k}y{i} c{k}x{j} c{k}y{j}\n"));
                }
            }
        }
    }
    let vectors = WordVectors::new(tokens, Matrix::from_rows(&rows)).unwrap();
    (vectors, parse_analogies(std::io::Cursor::new(text)).unwrap())
}

/// Per-class (tp, fp, fn) and F1 = 2tp / (2tp + fp + fn), tallied directly.
pub fn brute_force_f1(truths: &[String], preds: &[String], classes: &[String]) -> BTreeMap<String, f64> {
    classes
        .iter()
        .map(|c| {
            let (mut tp, mut fp, mut fnn) = (0u64, 0u64, 0u64);
            for (t, p) in truths.iter().zip(preds) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fnn += 1,
                    _ => {}
                }
            }
            let denom = 2 * tp + fp + fnn;
            let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
            (c.clone(), f1)
        })
        .collect()
}

pub fn brute_force_counts(truths: &[String], preds: &[String], classes: &[String]) -> Vec<Vec<u64>> {
    classes
        .iter()
        .map(|t| {
            classes
                .iter()
                .map(|p| {
                    truths
                        .iter()
                        .zip(preds)
                        .filter(|(a, b)| *a == t && *b == p)
                        .count() as u64
                })
                .collect()
        })
        .collect()
}
