//! Dense row-major matrix type used by every module in the crate.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An immutable m×n real matrix, stored row-major.
///
/// Invariants: `entries.len() == rows * cols`, both dimensions nonzero, and
/// every entry finite. Construction through [`DenseMatrix::new`] checks all
/// three; in-crate computations preserve them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::shape(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(DenseMatrix { rows, cols, entries })
    }

    /// Build without the finiteness scan. For internal arithmetic whose
    /// inputs are already validated.
    pub(crate) fn from_parts(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        DenseMatrix { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        DenseMatrix::from_parts(rows, cols, entries)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * n + i] = v;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        DenseMatrix::from_parts(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    /// self * other.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.entries[i * other.cols..(i + 1) * other.cols];
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b_kj;
                }
            }
        }
        out
    }

    /// self^T * other, without materializing the transpose.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "tr_matmul: row counts differ");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a_ki) in a_row.iter().enumerate() {
                if a_ki == 0.0 {
                    continue;
                }
                let out_row = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ki * b_kj;
                }
            }
        }
        out
    }

    /// self * x for a vector x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec: length mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// self^T * x for a vector x.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_mul_vec: length mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a_ij) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a_ij;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix::from_parts(self.rows, self.cols, self.entries.iter().map(|x| x * s).collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        DenseMatrix::from_parts(
            self.rows,
            self.cols,
            self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        DenseMatrix::from_parts(
            self.rows,
            self.cols,
            self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean norms of all columns.
    pub fn col_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &x) in sq.iter_mut().zip(self.row(i)) {
                *s += x * x;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Squared Euclidean norms of all rows.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), self.row(i))).collect()
    }

    /// Gather columns `indices[j]`, each multiplied by `scales[j]`.
    pub fn select_cols(&self, indices: &[usize], scales: &[f64]) -> DenseMatrix {
        assert_eq!(indices.len(), scales.len());
        let c = indices.len();
        let mut out = DenseMatrix::zeros(self.rows, c);
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (j, (&idx, &s)) in indices.iter().zip(scales).enumerate() {
                dst[j] = src[idx] * s;
            }
        }
        out
    }

    /// Gather rows `indices[j]`, each multiplied by `scales[j]`.
    pub fn select_rows(&self, indices: &[usize], scales: &[f64]) -> DenseMatrix {
        assert_eq!(indices.len(), scales.len());
        let mut out = DenseMatrix::zeros(indices.len(), self.cols);
        for (j, (&idx, &s)) in indices.iter().zip(scales).enumerate() {
            for (o, &x) in out.row_mut(j).iter_mut().zip(self.row(idx)) {
                *o = x * s;
            }
        }
        out
    }

    /// [self | extra] as one matrix with an appended column.
    pub fn append_col(&self, extra: &[f64]) -> DenseMatrix {
        assert_eq!(self.rows, extra.len(), "append_col: length mismatch");
        let mut out = DenseMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.set(i, self.cols, extra[i]);
        }
        out
    }

    /// Keep columns `[0, take)` of each row.
    pub fn take_cols(&self, take: usize) -> DenseMatrix {
        assert!(take <= self.cols);
        let mut out = DenseMatrix::zeros(self.rows, take);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..take]);
        }
        out
    }

    /// Keep rows `[0, take)`.
    pub fn take_rows(&self, take: usize) -> DenseMatrix {
        assert!(take <= self.rows);
        DenseMatrix::from_parts(take, self.cols, self.entries[..take * self.cols].to_vec())
    }

    /// Pad with zero rows up to `rows` (no-op if already that tall).
    pub fn pad_rows(&self, rows: usize) -> DenseMatrix {
        assert!(rows >= self.rows);
        let mut entries = self.entries.clone();
        entries.resize(rows * self.cols, 0.0);
        DenseMatrix::from_parts(rows, self.cols, entries)
    }

    /// Scale column `j` by `s[j]` in place.
    pub fn scale_cols(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.cols);
        for i in 0..self.rows {
            for (x, &f) in self.row_mut(i).iter_mut().zip(s) {
                *x *= f;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_shapes_and_nonfinite() {
        assert!(DenseMatrix::new(0, 3, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::new(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.entries(), &[58.0, 64.0, 139.0, 154.0]);
        let ct = b.tr_matmul(&a.transpose());
        assert_eq!(ct.entries(), c.transpose().entries());
    }

    #[test]
    fn select_cols_scales_entries() {
        let a = DenseMatrix::identity(3);
        let s = a.select_cols(&[2, 0], &[2.0, 3.0]);
        assert_eq!(s.get(2, 0), 2.0);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 0.0);
    }

    #[test]
    fn transpose_round_trip() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn vector_products_match_matmul() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i + 2 * j) as f64);
        let x = vec![1.0, -1.0, 2.0, 0.5];
        let via_mat = a.matmul(&DenseMatrix::column(&x));
        assert_eq!(a.mul_vec(&x), via_mat.col(0));
        let y = vec![2.0, 0.0, -3.0];
        let via_mat_t = a.transpose().matmul(&DenseMatrix::column(&y));
        assert_eq!(a.tr_mul_vec(&y), via_mat_t.col(0));
    }
}
