use nalgebra::DVector;

use super::quadrature::{degree5_rule, hat_gradients, map_point, signed_area};
use super::FemGrid;
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

fn vertices(grid: &FemGrid, t: &[usize; 3]) -> [[f64; 2]; 3] {
    t.map(|k| grid.node(k))
}

/// Consistent P1 mass matrix `M_ij = ∫ φ_j φ_i`.
pub fn assemble_mass(grid: &FemGrid) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * grid.n_triangles());
    for t in grid.triangles() {
        let area = signed_area(&vertices(grid, &t));
        for a in 0..3 {
            for b in 0..3 {
                let w = if a == b { 2.0 } else { 1.0 };
                triplets.push((t[a], t[b], area * w / 12.0));
            }
        }
    }
    SparseMatrix::from_triplets(grid.n_nodes(), grid.n_nodes(), &triplets).expect("grid indices")
}

/// Neumann Laplacian `A_ij = -κ ∫ ∇φ_j · ∇φ_i` (negative semidefinite).
pub fn assemble_stiffness(grid: &FemGrid, diffusion: f64) -> Result<SparseMatrix> {
    if !(diffusion > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion must be positive, got {diffusion}")));
    }
    let mut triplets = Vec::with_capacity(9 * grid.n_triangles());
    for t in grid.triangles() {
        let v = vertices(grid, &t);
        let area = signed_area(&v);
        let g = hat_gradients(&v);
        for a in 0..3 {
            for b in 0..3 {
                let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                triplets.push((t[a], t[b], -diffusion * area * dot));
            }
        }
    }
    SparseMatrix::from_triplets(grid.n_nodes(), grid.n_nodes(), &triplets)
}

fn checked(x: [f64; 2], v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure { x: x[0], y: x[1], value: v })
    }
}

/// Load vector `b_i = ∫ f φ_i` by seven-point quadrature per triangle.
pub fn load_vector(grid: &FemGrid, f: impl Fn([f64; 2]) -> f64) -> Result<DVector<f64>> {
    let rule = degree5_rule();
    let mut out = DVector::zeros(grid.n_nodes());
    for t in grid.triangles() {
        let v = vertices(grid, &t);
        let area = signed_area(&v);
        for (bary, w) in &rule {
            let x = map_point(&v, bary);
            let fx = checked(x, f(x))?;
            for a in 0..3 {
                out[t[a]] += area * w * fx * bary[a];
            }
        }
    }
    Ok(out)
}

/// Load vector `b_i = ∫ g · ∇φ_i` for a vector field `g`.
pub fn gradient_load_vector(
    grid: &FemGrid,
    g: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<DVector<f64>> {
    let rule = degree5_rule();
    let mut out = DVector::zeros(grid.n_nodes());
    for t in grid.triangles() {
        let v = vertices(grid, &t);
        let area = signed_area(&v);
        let grads = hat_gradients(&v);
        let mut mean = [0.0; 2];
        for (bary, w) in &rule {
            let x = map_point(&v, bary);
            let gx = g(x);
            mean[0] += w * checked(x, gx[0])?;
            mean[1] += w * checked(x, gx[1])?;
        }
        for a in 0..3 {
            out[t[a]] += area * (mean[0] * grads[a][0] + mean[1] * grads[a][1]);
        }
    }
    Ok(out)
}
