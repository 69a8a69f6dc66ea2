use serde::Serialize;

use super::RiccatiTrajectory;
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, prolongation_matrix};
use crate::linalg::{functional_norm, weighted_operator_norm, LowRankSymmetric};

/// `‖P_ref − P‖_{L(H)}` and `‖B_bᵀP_ref − B_bᵀP‖_{L(H)}` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiError {
    pub operator: f64,
    pub boundary: f64,
}

/// Compares a trajectory with a reference on the same or a finer nested
/// grid. The coarse operator acts through the L² projection onto its own
/// space, which in fine coefficients is `I P_c Iᵀ M_f`; each side's boundary
/// functional uses its own `B_b`.
pub fn riccati_error(study: &RiccatiTrajectory, reference: &RiccatiTrajectory, t: f64) -> Result<RiccatiError> {
    let (coarse, fine) = match (study.grid, reference.grid) {
        (Some(c), Some(f)) => (c, f),
        _ => return Err(Error::InvalidArgument("riccati_error needs trajectories on FEM grids".into())),
    };
    if coarse.level() > fine.level() {
        return Err(Error::GridNotNested { from: coarse.level(), to: fine.level() });
    }
    let pc = study.solution_at(t)?;
    let pf = reference.solution_at(t)?;
    let prolongation = prolongation_matrix(&coarse, &fine)?;
    let mass = assemble_mass(&fine);
    let lifted = LowRankSymmetric::new(prolongation.mul_dense(pc.factor()), pc.core().clone())?;
    let diff = pf.combine(1.0, &lifted, -1.0)?;
    let operator = weighted_operator_norm(&diff, &mass, 1e-12)?;

    // rows Bbᵀ L D Lᵀ on each side, the coarse one mapped by Iᵀ
    let row = |bb: &nalgebra::DMatrix<f64>, p: &LowRankSymmetric, factor: &nalgebra::DMatrix<f64>| {
        bb.tr_mul(p.factor()) * p.core() * factor.transpose()
    };
    let d = row(&reference.boundary_input, pf, pf.factor()) - row(&study.boundary_input, pc, lifted.factor());
    let boundary = functional_norm(&d, &mass)?;
    Ok(RiccatiError { operator, boundary })
}
