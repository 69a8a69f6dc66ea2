//! P1 finite elements on the unit square.

mod assembly;
mod grid;
pub mod io;
pub(crate) mod quadrature;
mod ritz;
mod transfer;

pub use assembly::{assemble_mass, assemble_stiffness, gradient_load_vector, load_vector};
pub use grid::{FemField, FemGrid};
pub use ritz::{ritz_project, FnField, RitzProjector, SmoothField};
pub use transfer::{l2_project, prolong, prolongation_matrix, L2Projector};

use quadrature::{degree5_rule, map_point, signed_area};

/// `‖u_h − f‖_{L²}` by seven-point quadrature on each triangle.
pub fn l2_error(field: &FemField, f: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let grid = field.grid();
    let u = field.values();
    let rule = degree5_rule();
    let mut acc = 0.0;
    for t in grid.triangles() {
        let v = t.map(|k| grid.node(k));
        let area = signed_area(&v);
        for (bary, w) in &rule {
            let uh = bary[0] * u[t[0]] + bary[1] * u[t[1]] + bary[2] * u[t[2]];
            let d = uh - f(map_point(&v, bary));
            acc += area * w * d * d;
        }
    }
    acc.sqrt()
}

/// `⟨u, v⟩_{L²} = uᵀ M v`.
pub fn mass_inner(mass: &crate::linalg::SparseMatrix, u: &nalgebra::DVector<f64>, v: &nalgebra::DVector<f64>) -> f64 {
    u.dot(&mass.mul_vec(v))
}
