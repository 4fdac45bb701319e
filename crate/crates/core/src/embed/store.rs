//! Row-addressed parameter storage.
//!
//! Training code touches parameters only through [`RowStore`], which lets the
//! same update routine run against owned matrices (single worker), lock-free
//! shared matrices (multiple workers), frozen tables (inference) and `f64`
//! matrices (gradient checks).

use std::sync::atomic::{AtomicU32, Ordering};

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<F = f32> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Entries uniform in [-0.5/cols, 0.5/cols].
    pub fn uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let half = 0.5 / cols as f64;
        let data = (0..rows * cols)
            .map(|_| F::from(rng.random_range(-half..=half)).unwrap())
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy with the given rows removed.
    pub fn without_rows(&self, drop: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        let mut rows = 0;
        for i in 0..self.rows {
            if !drop.contains(&i) {
                data.extend_from_slice(self.row(i));
                rows += 1;
            }
        }
        Matrix {
            rows,
            cols: self.cols,
            data,
        }
    }
}

pub trait RowStore<F: Float> {
    fn dot(&self, row: usize, x: &[F]) -> F;
    /// `acc += scale * row`
    fn accumulate(&self, row: usize, scale: F, acc: &mut [F]);
    /// `row += scale * x`
    fn add_scaled(&mut self, row: usize, scale: F, x: &[F]);
}

impl<F: Float> RowStore<F> for Matrix<F> {
    #[inline]
    fn dot(&self, row: usize, x: &[F]) -> F {
        dot(self.row(row), x)
    }

    #[inline]
    fn accumulate(&self, row: usize, scale: F, acc: &mut [F]) {
        for (a, r) in acc.iter_mut().zip(self.row(row)) {
            *a = *a + scale * *r;
        }
    }

    #[inline]
    fn add_scaled(&mut self, row: usize, scale: F, x: &[F]) {
        for (r, v) in self.row_mut(row).iter_mut().zip(x) {
            *r = *r + scale * *v;
        }
    }
}

impl<F: Float, S: RowStore<F>> RowStore<F> for &mut S {
    #[inline]
    fn dot(&self, row: usize, x: &[F]) -> F {
        (**self).dot(row, x)
    }

    #[inline]
    fn accumulate(&self, row: usize, scale: F, acc: &mut [F]) {
        (**self).accumulate(row, scale, acc)
    }

    #[inline]
    fn add_scaled(&mut self, row: usize, scale: F, x: &[F]) {
        (**self).add_scaled(row, scale, x)
    }
}

/// Read-only view; writes are discarded.
pub struct Frozen<'a, F = f32>(pub &'a Matrix<F>);

impl<F: Float> RowStore<F> for Frozen<'_, F> {
    #[inline]
    fn dot(&self, row: usize, x: &[F]) -> F {
        self.0.dot(row, x)
    }

    #[inline]
    fn accumulate(&self, row: usize, scale: F, acc: &mut [F]) {
        self.0.accumulate(row, scale, acc)
    }

    #[inline]
    fn add_scaled(&mut self, _row: usize, _scale: F, _x: &[F]) {}
}

/// A table that must never be touched, e.g. label vectors during inference.
pub struct Absent;

impl<F: Float> RowStore<F> for Absent {
    fn dot(&self, _row: usize, _x: &[F]) -> F {
        unreachable!("read from an absent parameter table")
    }

    fn accumulate(&self, _row: usize, _scale: F, _acc: &mut [F]) {
        unreachable!("read from an absent parameter table")
    }

    fn add_scaled(&mut self, _row: usize, _scale: F, _x: &[F]) {
        unreachable!("write to an absent parameter table")
    }
}

/// Matrix shared between training workers without locks. Elements are
/// relaxed atomics, so concurrent read-modify-write sequences on the same row
/// may lose updates; each individual load and store is still well defined.
pub struct SharedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<AtomicU32>,
}

impl SharedMatrix {
    pub fn new(m: Matrix<f32>) -> Self {
        SharedMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
        }
    }

    pub fn into_matrix(self) -> Matrix<f32> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .into_iter()
                .map(|a| f32::from_bits(a.into_inner()))
                .collect(),
        }
    }

    fn row(&self, i: usize) -> &[AtomicU32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn handle(&self) -> SharedRows<'_> {
        SharedRows(self)
    }
}

#[derive(Clone, Copy)]
pub struct SharedRows<'a>(&'a SharedMatrix);

#[inline]
fn load(a: &AtomicU32) -> f32 {
    f32::from_bits(a.load(Ordering::Relaxed))
}

impl RowStore<f32> for SharedRows<'_> {
    #[inline]
    fn dot(&self, row: usize, x: &[f32]) -> f32 {
        self.0.row(row).iter().zip(x).map(|(a, v)| load(a) * v).sum()
    }

    #[inline]
    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]) {
        for (a, r) in acc.iter_mut().zip(self.0.row(row)) {
            *a += scale * load(r);
        }
    }

    #[inline]
    fn add_scaled(&mut self, row: usize, scale: f32, x: &[f32]) {
        for (r, v) in self.0.row(row).iter().zip(x) {
            r.store((load(r) + scale * v).to_bits(), Ordering::Relaxed);
        }
    }
}

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |s, (x, y)| s + *x * *y)
}

pub fn norm<F: Float>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_matches_owned() {
        let mut m = Matrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0]]);
        let shared = SharedMatrix::new(m.clone());
        let mut h = shared.handle();
        h.add_scaled(1, 0.5, &[2.0, 2.0]);
        m.add_scaled(1, 0.5, &[2.0, 2.0]);
        assert_eq!(h.dot(1, &[1.0, 1.0]), m.dot(1, &[1.0, 1.0]));
        assert_eq!(shared.into_matrix(), m);
    }

    #[test]
    fn frozen_ignores_writes() {
        let m = Matrix::from_rows(&[vec![1.0f32, 2.0]]);
        let mut f = Frozen(&m);
        f.add_scaled(0, 1.0, &[5.0, 5.0]);
        assert_eq!(f.dot(0, &[1.0, 1.0]), 3.0);
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!(cosine(&[1.0, 0.0], &[0.0, 1.0]).abs() < 1e-12);
    }
}
