//! Ritz projection in the energy inner product `λ⟨u,v⟩ + κ⟨∇u,∇v⟩`.

use super::{assemble_mass, assemble_stiffness, gradient_load_vector, load_vector, FemField, FemGrid};
use crate::error::{Error, Result};
use crate::linalg::{spd_factorize, SparseMatrix, SpdFactorization};

/// A differentiable function on the unit square.
pub trait SmoothField {
    fn value(&self, x: [f64; 2]) -> f64;
    fn gradient(&self, x: [f64; 2]) -> [f64; 2];
}

/// [`SmoothField`] from a pair of closures.
pub struct FnField<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> SmoothField for FnField<F, G>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    fn value(&self, x: [f64; 2]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        (self.gradient)(x)
    }
}

/// Factorized `λM − A` for repeated Ritz projections on one grid.
#[derive(Debug, Clone)]
pub struct RitzProjector {
    grid: FemGrid,
    lambda: f64,
    diffusion: f64,
    shifted: SpdFactorization,
}

impl RitzProjector {
    pub fn new(grid: FemGrid, lambda: f64, diffusion: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        let m = assemble_mass(&grid);
        let a = assemble_stiffness(&grid, diffusion)?;
        let shifted = spd_factorize(&m.linear_combination(lambda, &a, -1.0)?)?;
        Ok(Self { grid, lambda, diffusion, shifted })
    }

    pub fn grid(&self) -> FemGrid {
        self.grid
    }

    /// The assembled `λM − A`.
    pub fn shifted_operator(&self) -> &SparseMatrix {
        self.shifted.matrix()
    }

    /// Energy load `b_i = ∫ λ f φ_i + κ ∇f · ∇φ_i`.
    pub fn energy_load(&self, f: &dyn SmoothField) -> Result<nalgebra::DVector<f64>> {
        let mass_part = load_vector(&self.grid, |x| self.lambda * f.value(x))?;
        let grad_part = gradient_load_vector(&self.grid, |x| {
            let g = f.gradient(x);
            [self.diffusion * g[0], self.diffusion * g[1]]
        })?;
        Ok(mass_part + grad_part)
    }

    pub fn project(&self, f: &dyn SmoothField) -> Result<FemField> {
        let load = self.energy_load(f)?;
        FemField::new(self.grid, self.shifted.solve(&load)?)
    }
}

/// Solves `(λM − A) c = b` with the energy load of `f`.
pub fn ritz_project(
    grid: &FemGrid,
    f: &dyn SmoothField,
    lambda: f64,
    diffusion: f64,
) -> Result<FemField> {
    RitzProjector::new(*grid, lambda, diffusion)?.project(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cos_x() -> FnField<impl Fn([f64; 2]) -> f64, impl Fn([f64; 2]) -> [f64; 2]> {
        FnField {
            value: |x: [f64; 2]| (PI * x[0]).cos(),
            gradient: |x: [f64; 2]| [-PI * (PI * x[0]).sin(), 0.0],
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let g = FemGrid::new(3).unwrap();
        let f = FnField { value: |_: [f64; 2]| 2.5, gradient: |_: [f64; 2]| [0.0, 0.0] };
        let r = ritz_project(&g, &f, 1.0, 1e-2).unwrap();
        assert!(r.values().add_scalar(-2.5).amax() < 1e-10);
    }

    #[test]
    fn members_of_the_space_are_fixed() {
        // hat function of node (2, 1) on level 2, written analytically via
        // prolongation-free evaluation on the structured mesh
        let g = FemGrid::new(2).unwrap();
        let h = g.h();
        let (ci, cj) = (2.0 * h, 1.0 * h);
        let hat = move |x: [f64; 2]| -> (f64, [f64; 2]) {
            let s = (x[0] - ci) / h;
            let t = (x[1] - cj) / h;
            // six triangles around the node for diagonal orientation ll→ur
            let (v, gx, gy) = if s >= 0.0 && t >= 0.0 && s >= t {
                (1.0 - s, -1.0, 0.0)
            } else if s >= 0.0 && t >= 0.0 {
                (1.0 - t, 0.0, -1.0)
            } else if s < 0.0 && t >= 0.0 {
                (1.0 + s - t, 1.0, -1.0)
            } else if s < 0.0 && t < 0.0 && s < t {
                (1.0 + s, 1.0, 0.0)
            } else if s < 0.0 && t < 0.0 {
                (1.0 + t, 0.0, 1.0)
            } else {
                (1.0 - s + t, -1.0, 1.0)
            };
            if v <= 0.0 {
                (0.0, [0.0, 0.0])
            } else {
                (v, [gx / h, gy / h])
            }
        };
        let f = FnField { value: move |x| hat(x).0, gradient: move |x| hat(x).1 };
        let r = ritz_project(&g, &f, 1.0, 0.3).unwrap();
        let mut expect = nalgebra::DVector::zeros(g.n_nodes());
        expect[g.index(2, 1)] = 1.0;
        assert!((r.values() - expect).amax() < 1e-10);
    }

    #[test]
    fn shifted_identity_with_l2_projection() {
        // (λM − A) R_h y equals the load of (λ − κΔ) y for y with zero normal derivative
        let (lambda, kappa) = (1.0, 1e-2);
        for level in 2..=5 {
            let g = FemGrid::new(level).unwrap();
            let p = RitzProjector::new(g, lambda, kappa).unwrap();
            let r = p.project(&cos_x()).unwrap();
            let lhs = p.shifted_operator().mul_vec(r.values());
            let rhs = load_vector(&g, |x| (lambda + kappa * PI * PI) * (PI * x[0]).cos()).unwrap();
            // equal up to the seven-point quadrature error of the two loads
            let err = (lhs - &rhs).amax() / rhs.amax();
            assert!(err < 1e-6, "level {level}: {err:e}");
        }
    }

    #[test]
    fn ritz_converges_at_second_order() {
        let mut pts = Vec::new();
        for level in 3..=6 {
            let g = FemGrid::new(level).unwrap();
            let r = ritz_project(&g, &cos_x(), 1.0, 1e-2).unwrap();
            pts.push((g.h(), super::super::l2_error(&r, &|x| (PI * x[0]).cos())));
        }
        let order = crate::harness::fit_order(&pts).unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn lambda_must_be_positive() {
        let g = FemGrid::new(1).unwrap();
        assert!(ritz_project(&g, &cos_x(), 0.0, 1.0).is_err());
    }
}
