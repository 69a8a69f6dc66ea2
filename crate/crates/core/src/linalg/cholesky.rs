//! SPD solves: envelope (profile) Cholesky, with a Jacobi-preconditioned
//! conjugate-gradient fallback for very large systems.

use nalgebra::{DMatrix, DVector};

use super::SparseMatrix;
use crate::error::{Error, Result};

/// Above this many unknowns the iterative path is used.
pub const DEFAULT_DIRECT_LIMIT: usize = 200_000;

const PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
pub struct SpdOptions {
    pub direct_limit: usize,
    pub cg_rtol: f64,
    pub cg_max_iter: usize,
}

impl Default for SpdOptions {
    fn default() -> Self {
        Self { direct_limit: DEFAULT_DIRECT_LIMIT, cg_rtol: 1e-13, cg_max_iter: 20_000 }
    }
}

/// Lower-triangular Cholesky factor stored row-wise over the envelope of `A`.
#[derive(Debug, Clone)]
struct EnvelopeCholesky {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        let first: Vec<usize> = (0..n).map(|i| a.first_col(i).unwrap_or(i).min(i)).collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    values[offset[i] + j - first[i]] = v;
                }
            }
        }
        let max_diag = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        for i in 0..n {
            let fi = first[i];
            let row_i = offset[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = offset[j];
                let mut s = values[row_i + j - fi];
                for k in start..j {
                    s -= values[row_i + k - fi] * values[row_j + k - fj];
                }
                values[row_i + j - fi] = s / values[row_j + j - fj];
            }
            let mut d = values[row_i + i - fi];
            for k in fi..i {
                let l = values[row_i + k - fi];
                d -= l * l;
            }
            if !(d > PIVOT_RTOL * max_diag) {
                return Err(Error::NotPositiveDefinite { row: i, pivot: d });
            }
            values[row_i + i - fi] = d.sqrt();
        }
        Ok(Self { first, offset, values })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.first.len();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let mut s = x[i];
            for k in fi..i {
                s -= row[k - fi] * x[k];
            }
            x[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(EnvelopeCholesky),
    Iterative { inv_diag: DVector<f64>, rtol: f64, max_iter: usize },
}

/// Reusable factorization of a symmetric positive definite sparse matrix.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    matrix: SparseMatrix,
    backend: Backend,
}

/// Factorizes `a` with default options.
pub fn spd_factorize(a: &SparseMatrix) -> Result<SpdFactorization> {
    spd_factorize_with(a, SpdOptions::default())
}

pub fn spd_factorize_with(a: &SparseMatrix, opts: SpdOptions) -> Result<SpdFactorization> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "SPD factorization needs a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::InvalidArgument("SPD factorization needs a symmetric matrix".into()));
    }
    let backend = if a.n_rows() < opts.direct_limit {
        Backend::Direct(EnvelopeCholesky::factor(a)?)
    } else {
        let diag = a.diagonal();
        let max_diag = diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let Some(row) = diag.iter().position(|&d| !(d > PIVOT_RTOL * max_diag)) {
            return Err(Error::NotPositiveDefinite { row, pivot: diag[row] });
        }
        Backend::Iterative {
            inv_diag: diag.map(|d| 1.0 / d),
            rtol: opts.cg_rtol,
            max_iter: opts.cg_max_iter,
        }
    };
    Ok(SpdFactorization { matrix: a.clone(), backend })
}

impl SpdFactorization {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for system of size {}",
                b.len(),
                self.dim()
            )));
        }
        match &self.backend {
            Backend::Direct(chol) => {
                let mut x = b.clone();
                chol.solve_in_place(x.as_mut_slice());
                Ok(x)
            }
            Backend::Iterative { inv_diag, rtol, max_iter } => {
                pcg(&self.matrix, inv_diag, b, *rtol, *max_iter)
            }
        }
    }

    pub fn solve_dense(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let x = self.solve(&b.column(c).into_owned())?;
            out.set_column(c, &x);
        }
        Ok(out)
    }
}

fn pcg(
    a: &SparseMatrix,
    inv_diag: &DVector<f64>,
    b: &DVector<f64>,
    rtol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let b_norm = b.norm();
    let mut x = DVector::zeros(b.len());
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut z = r.component_mul(inv_diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= rtol * b_norm {
            return Ok(x);
        }
        z = r.component_mul(inv_diag);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    Err(Error::NoConvergence { iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(n: usize, vals: &[f64]) -> SparseMatrix {
        SparseMatrix::from_dense(&DMatrix::from_row_slice(n, n, vals))
    }

    #[test]
    fn identity_solve_is_identity() {
        let f = spd_factorize(&SparseMatrix::identity(3)).unwrap();
        let b = DVector::from_vec(vec![1.5, -2.0, 7.0]);
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn two_by_two() {
        let f = spd_factorize(&dense(2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let x = f.solve(&DVector::from_vec(vec![3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_detected() {
        let err = spd_factorize(&dense(2, &[1.0, 2.0, 2.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { row: 1, .. }));
    }

    #[test]
    fn nonsymmetric_is_rejected() {
        assert!(spd_factorize(&dense(2, &[2.0, 1.0, 0.0, 2.0])).is_err());
    }

    #[test]
    fn iterative_fallback_matches_direct() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
            if i + 5 < n {
                t.push((i, i + 5, -0.5));
                t.push((i + 5, i, -0.5));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let direct = spd_factorize(&a).unwrap();
        let iter = spd_factorize_with(&a, SpdOptions { direct_limit: 0, ..Default::default() }).unwrap();
        assert!(direct.is_direct() && !iter.is_direct());
        let d = direct.solve(&b).unwrap();
        let it = iter.solve(&b).unwrap();
        assert!((d - it).norm() < 1e-11);
    }

    fn banded_spd(n: usize, band: usize, seed: &[f64]) -> SparseMatrix {
        // diagonally dominant banded matrix with pseudo-random off-diagonals
        let mut t = Vec::new();
        let mut k = 0;
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in i.saturating_sub(band)..i {
                let v = seed[k % seed.len()] - 0.5;
                k += 1;
                t.push((i, j, v));
                t.push((j, i, v));
                row_sum += v.abs();
            }
            t.push((i, i, 2.0 * band as f64 + 1.0 + row_sum));
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    proptest! {
        #[test]
        fn solve_residual_is_small(
            n in 2usize..40,
            band in 1usize..6,
            seed in proptest::collection::vec(0.0f64..1.0, 8),
            rhs in proptest::collection::vec(-10.0f64..10.0, 40),
        ) {
            let a = banded_spd(n, band, &seed);
            let b = DVector::from_iterator(n, rhs.into_iter().take(n));
            let f = spd_factorize(&a).unwrap();
            let x = f.solve(&b).unwrap();
            let res = (a.mul_vec(&x) - &b).norm();
            prop_assert!(res <= 1e-10 * b.norm().max(1e-300));
        }
    }
}
