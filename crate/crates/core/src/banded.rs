//! Symmetric banded matrices and their Cholesky factors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric `n x n` matrix with `a_ij = 0` for `|i - j| > bandwidth`.
///
/// Only the lower band is stored: `data[i * (bw + 1) + k] = a_{i, i-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    /// Takes the symmetric part of the band of `a`; entries outside the band are ignored.
    pub fn from_dense(a: &DMatrix<f64>, bandwidth: usize) -> Self {
        let n = a.nrows();
        let mut b = Self::zeros(n, bandwidth);
        for i in 0..n {
            for k in 0..=bandwidth.min(i) {
                b.data[i * (bandwidth + 1) + k] = 0.5 * (a[(i, i - k)] + a[(i - k, i)]);
            }
        }
        b
    }

    /// Smallest bandwidth containing all entries above `tol` in magnitude.
    pub fn detect_bandwidth(a: &DMatrix<f64>, tol: f64) -> usize {
        let mut bw = 0;
        for i in 0..a.nrows() {
            for j in 0..i {
                if a[(i, j)].abs() > tol || a[(j, i)].abs() > tol {
                    bw = bw.max(i - j);
                }
            }
        }
        bw
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            0.0
        } else {
            self.data[hi * (self.bw + 1) + (hi - lo)]
        }
    }

    /// Adds `v` to `a_ij` (and implicitly `a_ji`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        self.data[hi * (self.bw + 1) + (hi - lo)] += v;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, bw: self.bw, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &BandedMatrix, b: f64) -> Self {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = Self::zeros(self.n, bw);
        for i in 0..self.n {
            for k in 0..=bw.min(i) {
                out.data[i * (bw + 1) + k] = a * self.get(i, i - k) + b * other.get(i, i - k);
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        debug_assert!(x.len() == n && y.len() == n);
        for i in 0..n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n.saturating_sub(1));
            for j in lo..=hi {
                col_idx.push(j);
                values.push(self.get(i, j));
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix::from_parts(self.n, self.n, row_ptr, col_idx, values).expect("valid band pattern")
    }

    /// Principal submatrix on the contiguous index range `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let n = end - start;
        let mut out = Self::zeros(n, self.bw);
        for i in 0..n {
            for k in 0..=self.bw.min(i) {
                out.data[i * (self.bw + 1) + k] = self.get(start + i, start + i - k);
            }
        }
        out
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::new(self)
    }
}

/// `A = L L^T` with `L` lower triangular of the same bandwidth as `A`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // l[i * (bw + 1) + k] = L_{i, i-k}
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn new(a: &BandedMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            for j in jlo..=i {
                let mut s = a.get(i, j);
                let klo = jlo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(format!("banded pivot {i} = {s:e}")));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, k: usize) -> f64 {
        self.l[i * (self.bw + 1) + k]
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in 1..=self.bw.min(i) {
                s -= self.entry(i, k) * x[i - k];
            }
            x[i] = s / self.entry(i, 0);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in 1..=self.bw.min(n - 1 - i) {
                s -= self.entry(i + k, k) * x[i + k];
            }
            x[i] = s / self.entry(i, 0);
        }
    }

    /// Solves `A X = B` in place, where `B` is `n x width` row-major (factor acts on rows).
    pub fn solve_rows_in_place(&self, x: &mut [f64], width: usize) {
        let n = self.n;
        debug_assert_eq!(x.len(), n * width);
        for i in 0..n {
            let (done, rest) = x.split_at_mut(i * width);
            let row = &mut rest[..width];
            for k in 1..=self.bw.min(i) {
                let c = self.entry(i, k);
                let src = &done[(i - k) * width..(i - k + 1) * width];
                for (r, s) in row.iter_mut().zip(src) {
                    *r -= c * s;
                }
            }
            let d = 1.0 / self.entry(i, 0);
            row.iter_mut().for_each(|r| *r *= d);
        }
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * width);
            let row = &mut head[i * width..];
            for k in 1..=self.bw.min(n - 1 - i) {
                let c = self.entry(i + k, k);
                let src = &tail[(k - 1) * width..k * width];
                for (r, s) in row.iter_mut().zip(src) {
                    *r -= c * s;
                }
            }
            let d = 1.0 / self.entry(i, 0);
            row.iter_mut().for_each(|r| *r *= d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_like(n: usize) -> BandedMatrix {
        let mut a = BandedMatrix::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0);
            if i >= 1 {
                a.add(i, i - 1, -2.0);
            }
            if i >= 2 {
                a.add(i, i - 2, 0.5);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = laplace_like(9);
        let chol = a.cholesky().unwrap();
        let x: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let mut b = a.mul_vec(&x);
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn row_block_solve_matches_columnwise() {
        let a = laplace_like(7);
        let chol = a.cholesky().unwrap();
        let width = 3;
        let data: Vec<f64> = (0..7 * width).map(|k| (k as f64 * 0.37).cos()).collect();
        let mut block = data.clone();
        chol.solve_rows_in_place(&mut block, width);
        for c in 0..width {
            let mut col: Vec<f64> = (0..7).map(|r| data[r * width + c]).collect();
            chol.solve_in_place(&mut col);
            for r in 0..7 {
                assert!((col[r] - block[r * width + c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandedMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(0, 1, 2.0);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite(_))));
    }
}
