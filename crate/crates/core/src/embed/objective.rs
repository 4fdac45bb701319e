//! The negative-sampling objective and its stochastic gradient step.
//!
//! Every training mode reduces to the same example shape: a hidden vector
//! `h`, the mean of one or more input rows (word, document or label vectors),
//! scored against output rows `u_t`. The loss of one example is
//!
//! ```text
//! L = -log σ(u_target · h) - Σ_k log σ(-u_k · h)
//! ```
//!
//! over the negatives `k` (negatives equal to the target are skipped).
//! [`sgd_step`] applies `θ -= lr · ∂L/∂θ` to every table it is handed.

use num_traits::Float;

use super::store::RowStore;

/// Where an input row of an example lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Word(u32),
    Doc(u32),
    Label(u32),
}

/// Parameter tables an example reads and writes.
pub struct Tables<W, D, L, O> {
    pub words: W,
    pub docs: D,
    pub labels: L,
    pub output: O,
}

pub struct Scratch<F> {
    hidden: Vec<F>,
    grad: Vec<F>,
}

impl<F: Float> Scratch<F> {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![F::zero(); dim],
            grad: vec![F::zero(); dim],
        }
    }
}

/// `-log σ(x)`, computed without overflow.
#[inline]
pub fn neg_log_sigmoid<F: Float>(x: F) -> F {
    // softplus(-x) = max(-x, 0) + ln(1 + e^{-|x|})
    (-x).max(F::zero()) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn hidden_into<F, W, D, L, O>(tables: &Tables<W, D, L, O>, inputs: &[Input], hidden: &mut [F])
where
    F: Float,
    W: RowStore<F>,
    D: RowStore<F>,
    L: RowStore<F>,
{
    hidden.iter_mut().for_each(|h| *h = F::zero());
    let scale = F::one() / F::from(inputs.len()).unwrap();
    for input in inputs {
        match *input {
            Input::Word(i) => tables.words.accumulate(i as usize, scale, hidden),
            Input::Doc(i) => tables.docs.accumulate(i as usize, scale, hidden),
            Input::Label(i) => tables.labels.accumulate(i as usize, scale, hidden),
        }
    }
}

/// Loss of one example, without touching any parameter.
pub fn example_loss<F, W, D, L, O>(
    tables: &Tables<W, D, L, O>,
    inputs: &[Input],
    target: usize,
    negatives: &[usize],
    dim: usize,
) -> F
where
    F: Float,
    W: RowStore<F>,
    D: RowStore<F>,
    L: RowStore<F>,
    O: RowStore<F>,
{
    let mut hidden = vec![F::zero(); dim];
    hidden_into(tables, inputs, &mut hidden);
    let mut loss = neg_log_sigmoid(tables.output.dot(target, &hidden));
    for &k in negatives.iter().filter(|&&k| k != target) {
        loss = loss + neg_log_sigmoid(-tables.output.dot(k, &hidden));
    }
    loss
}

/// One SGD step on a single example. Returns the loss evaluated at the
/// parameters before the step.
///
/// With distinct target and negative rows and no repeated inputs, the change
/// applied to every row is exactly `-lr` times its partial derivative.
pub fn sgd_step<F, W, D, L, O>(
    tables: &mut Tables<W, D, L, O>,
    inputs: &[Input],
    target: usize,
    negatives: &[usize],
    lr: F,
    scratch: &mut Scratch<F>,
) -> F
where
    F: Float,
    W: RowStore<F>,
    D: RowStore<F>,
    L: RowStore<F>,
    O: RowStore<F>,
{
    if inputs.is_empty() {
        return F::zero();
    }
    let Scratch { hidden, grad } = scratch;
    hidden_into(tables, inputs, hidden);
    grad.iter_mut().for_each(|g| *g = F::zero());

    let mut loss = F::zero();
    let positive = std::iter::once((target, true));
    let noise = negatives
        .iter()
        .filter(|&&k| k != target)
        .map(|&k| (k, false));
    for (row, is_target) in positive.chain(noise) {
        let score = tables.output.dot(row, hidden);
        let p = sigmoid(score);
        // g = -∂L/∂score
        let g = if is_target {
            loss = loss + neg_log_sigmoid(score);
            F::one() - p
        } else {
            loss = loss + neg_log_sigmoid(-score);
            -p
        };
        let step = lr * g;
        tables.output.accumulate(row, step, grad);
        tables.output.add_scaled(row, step, hidden);
    }

    let share = F::one() / F::from(inputs.len()).unwrap();
    for input in inputs {
        match *input {
            Input::Word(i) => tables.words.add_scaled(i as usize, share, grad),
            Input::Doc(i) => tables.docs.add_scaled(i as usize, share, grad),
            Input::Label(i) => tables.labels.add_scaled(i as usize, share, grad),
        }
    }
    loss
}
