//! The Riccati equation in the generalized eigenbasis of `(A, M)`.
//!
//! With `A V = M V diag(μ)` and `Vᵀ M V = I`, writing the time-reversed
//! coefficient matrix as `X = V Z Vᵀ` turns
//! `X' = M⁻¹A X + X A M⁻¹ − X S X + M⁻¹ G M⁻¹` into
//! `Z' = ΛZ + ZΛ − Z Ŝ Z + Ĝ` with `Ŝ = ÛÛᵀ`, `Ĝ = ĈĈᵀ`. The linear part is
//! diagonal, so the affine subflow is exact, and the Euclidean norm of `Z`
//! equals the L(H) norm of `X`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{compress, LowRankSymmetric, SparseMatrix};

/// Generalized eigenpairs of `(A, M)`, M-orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eigenvalues: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralBasis {
    pub fn new(mass: &SparseMatrix, stiffness: &SparseMatrix) -> Result<Self> {
        let n = mass.n_rows();
        if stiffness.n_rows() != n || stiffness.n_cols() != n || mass.n_cols() != n {
            return Err(Error::DimensionMismatch("mass and stiffness sizes differ".into()));
        }
        let chol = mass.to_dense().cholesky().ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
        let l = chol.l();
        let a = stiffness.to_dense();
        let left = l.solve_lower_triangular(&a).ok_or(Error::SingularCoreUpdate)?;
        let both = l.solve_lower_triangular(&left.transpose()).ok_or(Error::SingularCoreUpdate)?;
        let eig = SymmetricEigen::new((&both + both.transpose()) * 0.5);
        let vectors = l.transpose().solve_upper_triangular(&eig.eigenvectors).ok_or(Error::SingularCoreUpdate)?;
        Ok(Self { eigenvalues: eig.eigenvalues, vectors })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Largest decay rate `max |μ|`.
    pub fn stiffness_bound(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `diag(e^{μτ}) F`.
    pub fn propagate_factor(&self, factor: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
        let decay = self.eigenvalues.map(|mu| (mu * tau).exp());
        let mut out = factor.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= decay[i];
        }
        out
    }

    /// Spectral coordinates `Vᵀ F` of a nodal load-type factor.
    pub fn load_to_spectral(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        self.vectors.tr_mul(f)
    }

    /// Nodal factor `V F` of spectral coordinates.
    pub fn to_nodal(&self, z: &LowRankSymmetric) -> Result<LowRankSymmetric> {
        LowRankSymmetric::new(&self.vectors * z.factor(), z.core().clone())
    }

    /// Spectral coordinates `Vᵀ M P M V` of a nodal coefficient matrix.
    pub fn from_nodal(&self, p: &LowRankSymmetric, mass: &SparseMatrix) -> Result<LowRankSymmetric> {
        LowRankSymmetric::new(self.vectors.tr_mul(&mass.mul_dense(p.factor())), p.core().clone())
    }
}

/// Exact flow of `P' = −P S P` with `S = UUᵀ`: `P(τ) = P (I + τ S P)⁻¹`,
/// computed on the core as `(I + τ D K)⁻¹ D` with `K = (LᵀU)(LᵀU)ᵀ`.
pub fn quadratic_flow(p: &LowRankSymmetric, s_factor: &DMatrix<f64>, tau: f64) -> Result<LowRankSymmetric> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!("negative substep {tau}")));
    }
    if p.rank() == 0 || tau == 0.0 {
        return Ok(p.clone());
    }
    let lu = p.factor().tr_mul(s_factor);
    let k = &lu * lu.transpose();
    let r = p.rank();
    let system = DMatrix::identity(r, r) + p.core() * k * tau;
    let lu_dec = system.lu();
    let core = lu_dec.solve(p.core()).ok_or(Error::SingularCoreUpdate)?;
    if !core.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularCoreUpdate);
    }
    LowRankSymmetric::new(p.factor().clone(), core)
}

/// Four-point Gauss–Legendre rule on [0, 1].
fn gauss_legendre4() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    [(-b, wb), (-a, wa), (a, wa), (b, wb)].map(|(x, w)| ((1.0 + x) / 2.0, w / 2.0))
}

/// `∫₀^τ e^{Λs} Ĉ Ĉᵀ e^{Λs} ds` in factored form.
///
/// Gauss–Legendre on a base interval short enough that `δ max|μ| ≤ 0.1`,
/// then repeated doubling `I(2δ) = I(δ) + E_δ I(δ) E_δ`.
pub fn source_integral(basis: &SpectralBasis, source: &DMatrix<f64>, tau: f64, tol: f64) -> LowRankSymmetric {
    let n = basis.dim();
    if tau <= 0.0 || source.ncols() == 0 {
        return LowRankSymmetric::zeros(n);
    }
    let mut doublings = 0u32;
    while tau / f64::from(1u32 << doublings) * basis.stiffness_bound() > 0.1 && doublings < 30 {
        doublings += 1;
    }
    let delta = tau / f64::from(1u32 << doublings);
    let q = source.ncols();
    let rule = gauss_legendre4();
    let mut base = DMatrix::zeros(n, rule.len() * q);
    for (i, (x, w)) in rule.iter().enumerate() {
        let cols = basis.propagate_factor(source, x * delta) * (w * delta).sqrt();
        base.columns_mut(i * q, q).copy_from(&cols);
    }
    let core = DMatrix::identity(base.ncols(), base.ncols());
    let mut acc = compress(&LowRankSymmetric::new(base, core).expect("square core"), tol);
    let mut step = delta;
    for _ in 0..doublings {
        let moved = LowRankSymmetric::new(basis.propagate_factor(acc.factor(), step), acc.core().clone())
            .expect("same shape");
        acc = compress(&acc.combine(1.0, &moved, 1.0).expect("same dimension"), tol);
        step *= 2.0;
    }
    acc
}

/// Exact affine flow `Z ↦ E Z E + I(τ)` with a precomputed source integral.
pub fn lyapunov_flow(
    basis: &SpectralBasis,
    z: &LowRankSymmetric,
    tau: f64,
    source_integral: &LowRankSymmetric,
    tol: f64,
) -> Result<LowRankSymmetric> {
    let moved = LowRankSymmetric::new(basis.propagate_factor(z.factor(), tau), z.core().clone())?;
    Ok(compress(&moved.combine(1.0, source_integral, 1.0)?, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness, FemGrid};

    fn basis(level: u32, kappa: f64) -> (SparseMatrix, SparseMatrix, SpectralBasis) {
        let g = FemGrid::new(level).unwrap();
        let m = assemble_mass(&g);
        let a = assemble_stiffness(&g, kappa).unwrap();
        let b = SpectralBasis::new(&m, &a).unwrap();
        (m, a, b)
    }

    #[test]
    fn basis_diagonalizes_the_pencil() {
        let (m, a, b) = basis(2, 0.3);
        let v = b.vectors();
        let vmv = v.tr_mul(&m.mul_dense(v));
        let vav = v.tr_mul(&a.mul_dense(v));
        let n = b.dim();
        assert!((vmv - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
        assert!((vav - DMatrix::from_diagonal(b.eigenvalues())).amax() < 1e-9);
        assert!(b.eigenvalues().iter().all(|&mu| mu < 1e-10));
    }

    #[test]
    fn quadratic_flow_scalar() {
        let p = LowRankSymmetric::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)).unwrap();
        let s = DMatrix::from_element(1, 1, 3f64.sqrt());
        let out = quadratic_flow(&p, &s, 0.5).unwrap();
        assert!((out.to_dense()[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(quadratic_flow(&p, &s, 0.0).unwrap(), p);
    }

    #[test]
    fn quadratic_flow_rejects_indefinite_blowup() {
        // p₀ = −1, s = 1: p(τ) = −1/(1 − τ) is singular at τ = 1
        let p = LowRankSymmetric::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, -1.0)).unwrap();
        let s = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(quadratic_flow(&p, &s, 1.0), Err(Error::SingularCoreUpdate)));
    }

    #[test]
    fn source_integral_matches_closed_form() {
        let (_, _, b) = basis(2, 1e-2 * 50.0);
        let n = b.dim();
        let c = DMatrix::from_fn(n, 2, |i, j| ((i * 3 + j * 7) as f64 * 0.31).sin());
        let tau = 0.37;
        let got = source_integral(&b, &c, tau, 1e-14).to_dense();
        let g = &c * c.transpose();
        let mu = b.eigenvalues();
        let exact = DMatrix::from_fn(n, n, |i, j| {
            let s = mu[i] + mu[j];
            let w = if s.abs() < 1e-14 { tau } else { (s * tau).exp_m1() / s };
            g[(i, j)] * w
        });
        assert!((got - &exact).amax() < 1e-10 * exact.amax(), "stiffness {}", b.stiffness_bound());
    }

    #[test]
    fn lyapunov_flow_is_identity_without_dynamics() {
        let g = FemGrid::new(1).unwrap();
        let m = assemble_mass(&g);
        let zero = SparseMatrix::from_triplets(9, 9, &[]).unwrap();
        let b = SpectralBasis::new(&m, &zero).unwrap();
        let z = LowRankSymmetric::new(DMatrix::from_fn(9, 2, |i, j| (i + j) as f64), DMatrix::identity(2, 2)).unwrap();
        let none = source_integral(&b, &DMatrix::zeros(9, 0), 0.5, 1e-12);
        let out = lyapunov_flow(&b, &z, 0.5, &none, 0.0).unwrap();
        assert!((out.to_dense() - z.to_dense()).amax() < 1e-12);
    }

    #[test]
    fn pure_decay_contracts() {
        let (_, _, b) = basis(2, 0.1);
        let n = b.dim();
        let z = LowRankSymmetric::new(DMatrix::from_fn(n, 3, |i, j| ((i * j) as f64).cos()), DMatrix::identity(3, 3))
            .unwrap();
        let out = lyapunov_flow(&b, &z, 0.2, &LowRankSymmetric::zeros(n), 1e-14).unwrap();
        let norm = |x: &LowRankSymmetric| x.to_dense().symmetric_eigen().eigenvalues.amax();
        assert!(norm(&out) <= norm(&z) * (1.0 + 1e-12));
    }
}
