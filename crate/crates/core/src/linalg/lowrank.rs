use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric matrix stored as `L D Lᵀ` with a tall factor `L` (n×r) and a
/// small symmetric core `D` (r×r).
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSymmetric {
    factor: DMatrix<f64>,
    core: DMatrix<f64>,
}

impl LowRankSymmetric {
    pub fn new(factor: DMatrix<f64>, core: DMatrix<f64>) -> Result<Self> {
        if core.nrows() != core.ncols() || core.nrows() != factor.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "factor {}x{} with core {}x{}",
                factor.nrows(),
                factor.ncols(),
                core.nrows(),
                core.ncols()
            )));
        }
        let core = symmetrize(&core);
        Ok(Self { factor, core })
    }

    pub fn zeros(n: usize) -> Self {
        Self { factor: DMatrix::zeros(n, 0), core: DMatrix::zeros(0, 0) }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.factor, self.core)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.dim(), self.dim());
        }
        let ld = &self.factor * &self.core;
        symmetrize(&(ld * self.factor.transpose()))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { factor: self.factor.clone(), core: &self.core * alpha }
    }

    /// Factored `alpha * self + beta * other` (rank adds; no compression).
    pub fn combine(&self, alpha: f64, other: &LowRankSymmetric, beta: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "low-rank sum of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let (r1, r2) = (self.rank(), other.rank());
        let mut factor = DMatrix::zeros(self.dim(), r1 + r2);
        factor.columns_mut(0, r1).copy_from(&self.factor);
        factor.columns_mut(r1, r2).copy_from(&other.factor);
        let mut core = DMatrix::zeros(r1 + r2, r1 + r2);
        core.view_mut((0, 0), (r1, r1)).copy_from(&(&self.core * alpha));
        core.view_mut((r1, r1), (r2, r2)).copy_from(&(&other.core * beta));
        Ok(Self { factor, core })
    }

    /// Applies a linear map to the factor: `X ↦ T X Tᵀ` for `T` given by `f`.
    pub fn map_factor(&self, f: impl FnOnce(&DMatrix<f64>) -> DMatrix<f64>) -> Result<Self> {
        Self::new(f(&self.factor), self.core.clone())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Re-factors `F` with orthonormal columns and a diagonal core, dropping
/// core eigenvalues with `|λ| <= tol · max|λ|`.
///
/// Retained eigenvalues are ordered by decreasing magnitude.
pub fn compress(f: &LowRankSymmetric, tol: f64) -> LowRankSymmetric {
    let n = f.dim();
    if f.rank() == 0 {
        return LowRankSymmetric::zeros(n);
    }
    let qr = f.factor.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let small = symmetrize(&(&r * &f.core * r.transpose()));
    let eig = SymmetricEigen::new(small);
    let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return LowRankSymmetric::zeros(n);
    }
    let mut keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() > tol * max_abs)
        .collect();
    keep.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let mut factor = DMatrix::zeros(n, keep.len());
    let mut core = DMatrix::zeros(keep.len(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        factor.set_column(c, &(&q * eig.eigenvectors.column(i)));
        core[(c, c)] = eig.eigenvalues[i];
    }
    LowRankSymmetric { factor, core }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn rank_one_is_preserved_exactly() {
        let v = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
        let f = LowRankSymmetric::new(v, DMatrix::from_element(1, 1, 2.5)).unwrap();
        let c = compress(&f, 0.0);
        assert_eq!(c.rank(), 1);
        assert!((c.to_dense() - f.to_dense()).abs().max() < 1e-12);
    }

    #[test]
    fn duplicated_column_collapses() {
        let mut l = DMatrix::zeros(3, 2);
        l[(0, 0)] = 1.0;
        l[(0, 1)] = 1.0;
        let f = LowRankSymmetric::new(l, DMatrix::identity(2, 2)).unwrap();
        let c = compress(&f, 1e-12);
        assert_eq!(c.rank(), 1);
        let mut expect = DMatrix::zeros(3, 3);
        expect[(0, 0)] = 2.0;
        assert!((c.to_dense() - expect).abs().max() < 1e-12);
    }

    #[test]
    fn known_rank_is_recovered() {
        // n = 20, rank 8 from explicit factors
        let l = DMatrix::from_fn(20, 8, |i, j| ((i * i * 7 + j * j * 13 + i * j) as f64 * 0.37).sin());
        let d = DMatrix::from_diagonal(&DVector::from_fn(8, |i, _| if i % 2 == 0 { 1.0 + i as f64 } else { -0.5 - i as f64 }));
        let f = LowRankSymmetric::new(l, d).unwrap();
        let doubled = f.combine(0.5, &f, 0.5).unwrap();
        assert_eq!(doubled.rank(), 16);
        let c = compress(&doubled, 1e-12);
        assert_eq!(c.rank(), 8);
        assert!((c.to_dense() - f.to_dense()).norm() < 1e-10);
        let gram = c.factor().transpose() * c.factor();
        assert!((gram - DMatrix::identity(8, 8)).abs().max() < 1e-10);
    }

    #[test]
    fn zero_input_gives_rank_zero() {
        let f = LowRankSymmetric::new(DMatrix::zeros(5, 2), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(compress(&f, 0.0).rank(), 0);
        assert_eq!(compress(&LowRankSymmetric::zeros(5), 0.0).dim(), 5);
    }

    proptest! {
        #[test]
        fn compress_is_idempotent(
            vals in proptest::collection::vec(-1.0f64..1.0, 12 * 5),
            core in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let l = DMatrix::from_column_slice(12, 5, &vals);
            let d = DMatrix::from_diagonal(&DVector::from_vec(core));
            let f = LowRankSymmetric::new(l, d).unwrap();
            let once = compress(&f, 1e-10);
            let twice = compress(&once, 1e-10);
            let a = once.to_dense();
            if a.norm() > 0.0 {
                prop_assert!(rel_diff(&twice.to_dense(), &a) <= 1e-12);
            }
            let err = (once.to_dense() - f.to_dense()).norm();
            prop_assert!(err <= 1e-10 * f.to_dense().norm() * (5f64).sqrt() + 1e-13);
        }
    }
}
