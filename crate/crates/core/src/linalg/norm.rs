//! Operator norms in the mass-matrix (L²) inner product.
//!
//! A coefficient matrix `P` acts on FEM fields as `y ↦ Σ P_ij ⟨y, φ_j⟩ φ_i`,
//! so its L(H) norm is the spectral norm of `M^{1/2} P M^{1/2}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{LowRankSymmetric, SparseMatrix};
use crate::error::{Error, Result};

pub const POWER_ITERATION_CAP: usize = 20_000;

/// Operand accepted by [`weighted_operator_norm`].
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Dense(&'a DMatrix<f64>),
    LowRank(&'a LowRankSymmetric),
}

impl<'a> From<&'a DMatrix<f64>> for Operand<'a> {
    fn from(p: &'a DMatrix<f64>) -> Self {
        Operand::Dense(p)
    }
}

impl<'a> From<&'a LowRankSymmetric> for Operand<'a> {
    fn from(p: &'a LowRankSymmetric) -> Self {
        Operand::LowRank(p)
    }
}

/// `‖M^{1/2} P M^{1/2}‖₂`.
///
/// Dense operands use power iteration on `(PM)*(PM)` in the M-inner product,
/// started from the normalized all-ones vector. Low-rank operands are
/// evaluated exactly through the r×r Gram matrix `LᵀML`.
pub fn weighted_operator_norm<'a>(
    p: impl Into<Operand<'a>>,
    m: &SparseMatrix,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    match p.into() {
        Operand::Dense(p) => dense_weighted_norm(p, m, tol),
        Operand::LowRank(p) => lowrank_weighted_norm(p, m),
    }
}

fn m_norm(m: &SparseMatrix, x: &DVector<f64>) -> f64 {
    x.dot(&m.mul_vec(x)).max(0.0).sqrt()
}

/// Power iteration for the M-weighted norm of a general linear map `t`,
/// with M-adjoint `t_adj`.
pub fn power_iteration_m_norm(
    m: &SparseMatrix,
    t: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    t_adj: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    tol: f64,
) -> Result<f64> {
    let n = m.n_rows();
    let mut x = DVector::from_element(n, 1.0);
    let nx = m_norm(m, &x);
    x /= nx;
    let stop = (1e-3 * tol).max(4.0 * f64::EPSILON);
    let mut sigma_prev = f64::NAN;
    for _ in 0..POWER_ITERATION_CAP {
        let y = t(&x)?;
        let sigma = m_norm(m, &y);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        if (sigma - sigma_prev).abs() <= stop * sigma {
            return Ok(sigma);
        }
        sigma_prev = sigma;
        let z = t_adj(&y)?;
        let nz = m_norm(m, &z);
        if nz == 0.0 {
            return Ok(sigma);
        }
        x = z / nz;
    }
    Err(Error::NoConvergence { iterations: POWER_ITERATION_CAP })
}

fn dense_weighted_norm(p: &DMatrix<f64>, m: &SparseMatrix, tol: f64) -> Result<f64> {
    let n = m.n_rows();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} with mass matrix of size {n}",
            p.nrows(),
            p.ncols()
        )));
    }
    // T = P M, T* = Pᵀ M in the M-inner product
    power_iteration_m_norm(
        m,
        |x| Ok(p * m.mul_vec(x)),
        |y| Ok(p.tr_mul(&m.mul_vec(y))),
        tol,
    )
}

fn lowrank_weighted_norm(p: &LowRankSymmetric, m: &SparseMatrix) -> Result<f64> {
    if p.dim() != m.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} with mass matrix of size {}",
            p.dim(),
            m.n_rows()
        )));
    }
    if p.rank() == 0 {
        return Ok(0.0);
    }
    let sqrt_gram = gram_sqrt(&p.factor().tr_mul(&m.mul_dense(p.factor())));
    let small = &sqrt_gram * p.core() * &sqrt_gram;
    let small = (&small + small.transpose()) * 0.5;
    let eig = SymmetricEigen::new(small);
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
}

/// Symmetric square root of a PSD Gram matrix, clipping tiny negative
/// eigenvalues caused by rounding.
fn gram_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let g = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let sq = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sq) * eig.eigenvectors.transpose()
}

/// `‖D M^{1/2}‖₂` for a short, wide matrix `D` of functionals acting on
/// mass-weighted coefficients (`y ↦ D M ŷ`).
pub fn functional_norm(d: &DMatrix<f64>, m: &SparseMatrix) -> Result<f64> {
    if d.ncols() != m.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "functional of width {} with mass matrix of size {}",
            d.ncols(),
            m.n_rows()
        )));
    }
    let dm = m.mul_dense(&d.transpose());
    let small = d * dm;
    let small = (&small + small.transpose()) * 0.5;
    let eig = SymmetricEigen::new(small);
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(*v)).sqrt())
}
