//! Dense row-major matrix with the two products the solvers need.
//!
//! Both `A·x` and `Aᵀ·r` make a single pass over the storage. Large products
//! are split across threads by output block, so every output entry is
//! accumulated in the same order regardless of the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Products with fewer entries than this run on the calling thread.
const PAR_THRESHOLD: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `out = A·x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        if self.cols == 0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        if self.data.len() >= PAR_THRESHOLD {
            out.par_iter_mut()
                .zip(self.data.par_chunks_exact(self.cols))
                .for_each(|(o, row)| *o = dot(row, x));
        } else {
            for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
                *o = dot(row, x);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = Aᵀ·r`
    pub fn tmul_vec_into(&self, r: &[f64], out: &mut [f64]) {
        assert_eq!(r.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.cols == 0 {
            return;
        }
        let cols = self.cols;
        if self.data.len() >= PAR_THRESHOLD {
            // column blocks; each block walks all rows in order
            let block = 256;
            out.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
                let start = b * block;
                let end = start + chunk.len();
                for (i, &ri) in r.iter().enumerate() {
                    let row = &self.data[i * cols + start..i * cols + end];
                    axpy(ri, row, chunk);
                }
            });
        } else {
            for (row, &ri) in self.data.chunks_exact(cols).zip(r) {
                axpy(ri, row, out);
            }
        }
    }

    pub fn tmul_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tmul_vec_into(r, &mut out);
        out
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (s, v) in sq.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Largest singular value by power iteration on `AᵀA`, stopped when the
    /// relative change of the estimate falls below `rel_tol`.
    pub fn spectral_norm(&self, rel_tol: f64, max_iter: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        // deterministic start with no special alignment to any axis
        let mut v: Vec<f64> = (0..self.cols)
            .map(|j| 1.0 + 0.5 * ((j as f64) * 0.618_033_988_749_895).fract())
            .collect();
        normalize(&mut v);
        let mut av = vec![0.0; self.rows];
        let mut atav = vec![0.0; self.cols];
        let mut sigma = 0.0;
        for _ in 0..max_iter {
            self.mul_vec_into(&v, &mut av);
            self.tmul_vec_into(&av, &mut atav);
            let lambda = norm2(&atav);
            let next = lambda.sqrt();
            if lambda == 0.0 {
                return 0.0;
            }
            v.iter_mut().zip(&atav).for_each(|(vi, a)| *vi = a / lambda);
            if (next - sigma).abs() <= rel_tol * next {
                return next;
            }
            sigma = next;
        }
        sigma
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols)
            .map(|k| ((k * 37 % 101) as f64 - 50.0) / 17.0)
            .collect();
        DenseMatrix::from_row_major(rows, cols, data).unwrap()
    }

    fn naive_mul(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
        (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| a.get(i, j) * x[j]).sum())
            .collect()
    }

    fn naive_tmul(a: &DenseMatrix, r: &[f64]) -> Vec<f64> {
        (0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a.get(i, j) * r[i]).sum())
            .collect()
    }

    #[test]
    fn products_match_naive() {
        for &(m, n) in &[(1, 1), (3, 17), (40, 9), (700, 800)] {
            let a = sample(m, n);
            let x: Vec<f64> = (0..n).map(|j| (j as f64).sin()).collect();
            let r: Vec<f64> = (0..m).map(|i| (i as f64 * 0.3).cos()).collect();
            for (u, v) in a.mul_vec(&x).iter().zip(naive_mul(&a, &x)) {
                assert!((u - v).abs() < 1e-10 * (1.0 + v.abs()));
            }
            for (u, v) in a.tmul_vec(&r).iter().zip(naive_tmul(&a, &r)) {
                assert!((u - v).abs() < 1e-10 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut a = DenseMatrix::zeros(3, 3);
        a.set(0, 0, 1.0);
        a.set(1, 1, -3.0);
        a.set(2, 2, 2.0);
        assert!((a.spectral_norm(1e-12, 10_000) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn shape_errors() {
        assert!(DenseMatrix::from_row_major(2, 2, vec![0.0; 3]).is_err());
    }
}
