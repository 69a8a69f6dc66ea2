//! Compressed sparse row storage for the FEM matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real sparse matrix in CSR form. Column indices are sorted within each row
/// and contain no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sparse copy of a dense matrix, dropping exact zeros.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    triplets.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &triplets).expect("indices in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Symmetry test `max|a_ij - a_ji| <= 1e-12 max|a_ij|`.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let tol = 1e-12 * self.max_abs();
        (0..self.n_rows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n_cols, "sparse mul_vec: length mismatch");
        DVector::from_iterator(
            self.n_rows,
            (0..self.n_rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n_rows, "sparse tr_mul_vec: length mismatch");
        let mut out = DVector::zeros(self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                out[j] += v * x[i];
            }
        }
        out
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols, "sparse mul_dense: shape mismatch");
        let mut out = DMatrix::zeros(self.n_rows, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.n_rows {
                out[(i, c)] = self.row(i).map(|(j, v)| v * x[(j, c)]).sum();
            }
        }
        out
    }

    /// `selfᵀ x` for a dense block.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_rows, "sparse tr_mul_dense: shape mismatch");
        let mut out = DMatrix::zeros(self.n_cols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.n_rows {
                let xi = x[(i, c)];
                for (j, v) in self.row(i) {
                    out[(j, c)] += v * xi;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `alpha * self + beta * other`; both operands must have equal shape.
    pub fn linear_combination(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &triplets)
    }

    /// Lower bandwidth: `max (i - j)` over stored entries with `j < i`.
    pub fn lower_bandwidth(&self) -> usize {
        (0..self.n_rows)
            .filter_map(|i| self.row(i).next().map(|(j, _)| i.saturating_sub(j)))
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn first_col(&self, i: usize) -> Option<usize> {
        self.row(i).next().map(|(j, _)| j)
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_rows.min(self.n_cols), (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, -1.0, 0.0, 3.0]);
        let s = SparseMatrix::from_dense(&d);
        let x = DVector::from_vec(vec![0.5, -2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.mul_vec(&x), &d * &x);
        assert_eq!(s.tr_mul_vec(&y), d.transpose() * &y);
        let xm = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mul_dense(&xm), &d * &xm);
        let ym = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert_eq!(s.tr_mul_dense(&ym), d.transpose() * &ym);
    }

    #[test]
    fn symmetry_check() {
        let s = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert!(s.is_symmetric());
        let n = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]));
        assert!(!n.is_symmetric());
    }
}
