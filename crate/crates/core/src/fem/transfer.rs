//! Transfer between nested grids: exact nodal prolongation and L² projection.

use nalgebra::DVector;

use super::{assemble_mass, FemField, FemGrid};
use crate::error::{Error, Result};
use crate::linalg::{spd_factorize, SparseMatrix, SpdFactorization};

/// Nodal prolongation `I` (N_fine × N_coarse): coarse hat functions written
/// in the fine basis, `φ^c_j = Σ_k I_kj φ^f_k`.
pub fn prolongation_matrix(coarse: &FemGrid, fine: &FemGrid) -> Result<SparseMatrix> {
    if fine.level() < coarse.level() {
        return Err(Error::GridNotNested { from: coarse.level(), to: fine.level() });
    }
    let ratio = 1usize << (fine.level() - coarse.level());
    let nf = fine.n_per_side();
    let cells = coarse.cells_per_side();
    let mut triplets = Vec::with_capacity(3 * fine.n_nodes());
    for fj in 0..nf {
        for fi in 0..nf {
            // owning coarse cell and integer local offsets in [0, ratio]
            let ci = (fi / ratio).min(cells - 1);
            let cj = (fj / ratio).min(cells - 1);
            let (si, sj) = (fi - ci * ratio, fj - cj * ratio);
            let s = si as f64 / ratio as f64;
            let t = sj as f64 / ratio as f64;
            let ll = coarse.index(ci, cj);
            let lr = coarse.index(ci + 1, cj);
            let ur = coarse.index(ci + 1, cj + 1);
            let ul = coarse.index(ci, cj + 1);
            let weights = if si >= sj {
                [(ll, 1.0 - s), (lr, s - t), (ur, t)]
            } else {
                [(ll, 1.0 - t), (ur, s), (ul, t - s)]
            };
            let row = fine.index(fi, fj);
            for (col, w) in weights {
                if w != 0.0 {
                    triplets.push((row, col, w));
                }
            }
        }
    }
    SparseMatrix::from_triplets(fine.n_nodes(), coarse.n_nodes(), &triplets)
}

/// Exact interpolation of a coarse P1 field onto a finer nested grid.
pub fn prolong(source: &FemField, target: &FemGrid) -> Result<FemField> {
    let p = prolongation_matrix(&source.grid(), target)?;
    FemField::new(*target, p.mul_vec(source.values()))
}

/// Reusable L² projection from a fine grid onto a coarser nested grid:
/// `y_c = M_c⁻¹ Iᵀ M_f y_f`.
#[derive(Debug, Clone)]
pub struct L2Projector {
    fine: FemGrid,
    coarse: FemGrid,
    prolongation: SparseMatrix,
    fine_mass: SparseMatrix,
    coarse_mass: SpdFactorization,
}

impl L2Projector {
    pub fn new(fine: FemGrid, coarse: FemGrid) -> Result<Self> {
        if coarse.level() > fine.level() {
            return Err(Error::GridNotNested { from: fine.level(), to: coarse.level() });
        }
        Ok(Self {
            fine,
            coarse,
            prolongation: prolongation_matrix(&coarse, &fine)?,
            fine_mass: assemble_mass(&fine),
            coarse_mass: spd_factorize(&assemble_mass(&coarse))?,
        })
    }

    pub fn fine(&self) -> FemGrid {
        self.fine
    }

    pub fn coarse(&self) -> FemGrid {
        self.coarse
    }

    pub fn prolongation(&self) -> &SparseMatrix {
        &self.prolongation
    }

    pub fn project(&self, field: &FemField) -> Result<FemField> {
        if field.grid() != self.fine {
            return Err(Error::GridNotNested { from: field.grid().level(), to: self.coarse.level() });
        }
        let rhs = self.restrict_load(&self.fine_mass.mul_vec(field.values()));
        FemField::new(self.coarse, self.coarse_mass.solve(&rhs)?)
    }

    /// Coarse load vector `Iᵀ b` of a fine load vector `b = (⟨g, φ^f_k⟩)_k`.
    /// Equals `M_c` times the L² projection of `g`.
    pub fn restrict_load(&self, load: &DVector<f64>) -> DVector<f64> {
        self.prolongation.tr_mul_vec(load)
    }
}

/// L² projection onto a coarser (or equal) nested grid.
pub fn l2_project(source: &FemField, target: &FemGrid) -> Result<FemField> {
    L2Projector::new(source.grid(), *target)?.project(source)
}
