//! Dense and sparse (CSR) matrix containers used across the pipeline.
//!
//! These are deliberately small: the algorithms in this crate need row
//! iteration, block products and a handful of norms, nothing more.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds from a row-major slice. Panics if `data.len() != nrows * ncols`.
    pub fn from_rows(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "row-major data length mismatch");
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self * other`; panics on shape mismatch.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let dst = i * other.ncols;
                let src = l * other.ncols;
                for j in 0..other.ncols {
                    out.data[dst + j] += a * other.data[src + j];
                }
            }
        }
        out
    }

    /// `self^T * other`; panics on shape mismatch.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.nrows, other.nrows, "tr_matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.ncols, other.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let dst = l * other.ncols;
                let src = i * other.ncols;
                for j in 0..other.ncols {
                    out.data[dst + j] += a * other.data[src + j];
                }
            }
        }
        out
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Compressed sparse row matrix with `f64` values.
///
/// Stored entries within a row are ordered by ascending column index so
/// iteration order, and therefore floating-point reductions, are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; each list must be sorted
    /// by column with no duplicates. Zero values are dropped.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                assert!(j < ncols, "column index out of bounds");
                if let Some(p) = prev {
                    assert!(j > p, "row entries must be sorted and unique");
                }
                prev = Some(j);
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }
}

/// Minimal read access shared by dense and sparse matrices, enough for the
/// block products inside the truncated SVD.
pub trait MatrixRef {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * block` where `block` is `ncols x k`.
    fn mul_block(&self, block: &DenseMatrix) -> DenseMatrix;
    /// `self^T * block` where `block` is `nrows x k`.
    fn tr_mul_block(&self, block: &DenseMatrix) -> DenseMatrix;
    /// Squared L2 norm of every column.
    fn column_sq_norms(&self) -> Vec<f64>;
    fn frobenius_norm(&self) -> f64;
}

impl MatrixRef for DenseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn mul_block(&self, block: &DenseMatrix) -> DenseMatrix {
        self.matmul(block)
    }

    fn tr_mul_block(&self, block: &DenseMatrix) -> DenseMatrix {
        self.tr_matmul(block)
    }

    fn column_sq_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i).iter().enumerate() {
                norms[j] += v * v;
            }
        }
        norms
    }

    fn frobenius_norm(&self) -> f64 {
        DenseMatrix::frobenius_norm(self)
    }
}

impl MatrixRef for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn mul_block(&self, block: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, block.nrows());
        let k = block.ncols();
        let mut out = DenseMatrix::zeros(self.nrows, k);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let src = j * k;
                let dst = out.row_mut(i);
                for c in 0..k {
                    dst[c] += v * block.data[src + c];
                }
            }
        }
        out
    }

    fn tr_mul_block(&self, block: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.nrows, block.nrows());
        let k = block.ncols();
        let mut out = DenseMatrix::zeros(self.ncols, k);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let dst = j * k;
                let src = block.row(i);
                for c in 0..k {
                    out.data[dst + c] += v * src[c];
                }
            }
        }
        out
    }

    fn column_sq_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0; self.ncols];
        for (j, v) in self.indices.iter().zip(self.values.iter()) {
            norms[*j] += v * v;
        }
        norms
    }

    fn frobenius_norm(&self) -> f64 {
        CsrMatrix::frobenius_norm(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_roundtrip_and_products() {
        let rows = vec![vec![(0, 1.0), (2, 2.0)], vec![(1, 3.0)]];
        let m = CsrMatrix::from_rows(3, &rows);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        let d = m.to_dense();
        let block = DenseMatrix::from_rows(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.mul_block(&block), d.matmul(&block));
        let block2 = DenseMatrix::from_rows(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.tr_mul_block(&block2), d.transpose().matmul(&block2));
    }

    #[test]
    fn dense_transpose_matmul() {
        let a = DenseMatrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let at = a.transpose();
        let prod = a.matmul(&at);
        assert_eq!(prod.get(0, 0), 14.0);
        assert_eq!(prod.get(0, 1), 32.0);
        assert_eq!(prod.get(1, 1), 77.0);
        assert_eq!(a.tr_matmul(&a), at.matmul(&a));
    }
}
