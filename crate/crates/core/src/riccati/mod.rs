//! Backward differential Riccati equation
//! `M Ṗ M = −APM − MPA + MPSPM − CᵀQC`, `P(T) = 0`, by Strang splitting
//! with low-rank factors.

mod checkpoint;
mod compare;
mod spectral;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use compare::{riccati_error, RiccatiError};
pub use spectral::{lyapunov_flow, quadratic_flow, source_integral, SpectralBasis};

use nalgebra::DMatrix;

use crate::control::OperatorSet;
use crate::error::{Error, Result};
use crate::fem::FemGrid;
use crate::linalg::{LowRankSymmetric, SparseMatrix};

#[derive(Debug, Clone)]
pub struct DreProblem {
    pub grid: Option<FemGrid>,
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub input: DMatrix<f64>,
    pub boundary_input: DMatrix<f64>,
    pub output: DMatrix<f64>,
    pub input_weight: DMatrix<f64>,
    pub boundary_weight: DMatrix<f64>,
    pub output_weight: DMatrix<f64>,
    pub final_time: f64,
    pub dt: f64,
}

impl DreProblem {
    pub fn from_operators(grid: FemGrid, ops: &OperatorSet, final_time: f64, dt: f64) -> Result<Self> {
        let problem = Self {
            grid: Some(grid),
            mass: ops.mass.clone(),
            stiffness: ops.stiffness.clone(),
            input: ops.input.to_dense(),
            boundary_input: DMatrix::from_column_slice(ops.boundary_input.len(), 1, ops.boundary_input.as_slice()),
            output: ops.output.clone(),
            input_weight: ops.input_weight.clone(),
            boundary_weight: ops.boundary_weight.clone(),
            output_weight: ops.output_weight.clone(),
            final_time,
            dt,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.mass.n_rows()
    }

    pub fn n_steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !(self.final_time > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidArgument("final time and step must be positive".into()));
        }
        let steps = self.final_time / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "step {} does not divide final time {}",
                self.dt, self.final_time
            )));
        }
        let shapes_ok = self.stiffness.n_rows() == n
            && self.input.nrows() == n
            && self.boundary_input.nrows() == n
            && self.output.ncols() == n
            && self.input_weight.shape() == (self.input.ncols(), self.input.ncols())
            && self.boundary_weight.shape() == (self.boundary_input.ncols(), self.boundary_input.ncols())
            && self.output_weight.shape() == (self.output.nrows(), self.output.nrows());
        if !shapes_ok {
            return Err(Error::DimensionMismatch("Riccati problem operator shapes are inconsistent".into()));
        }
        Ok(())
    }

    /// `U` with `UUᵀ = B R⁻¹ Bᵀ + B_b R_b⁻¹ B_bᵀ`.
    pub fn input_factor(&self) -> Result<DMatrix<f64>> {
        let ub = weighted_columns(&self.input, &self.input_weight, true)?;
        let ubb = weighted_columns(&self.boundary_input, &self.boundary_weight, true)?;
        let mut u = DMatrix::zeros(self.n(), ub.ncols() + ubb.ncols());
        u.columns_mut(0, ub.ncols()).copy_from(&ub);
        u.columns_mut(ub.ncols(), ubb.ncols()).copy_from(&ubb);
        Ok(u)
    }

    /// `Cᵀ L_Q` with `L_Q L_Qᵀ = Q`.
    pub fn source_factor(&self) -> Result<DMatrix<f64>> {
        weighted_columns(&self.output.transpose(), &self.output_weight, false)
    }
}

/// `F L⁻ᵀ` (so that the product with its transpose is `F W⁻¹ Fᵀ`) when
/// `inverse`, otherwise `F L` (giving `F W Fᵀ`), for `W = L Lᵀ`.
fn weighted_columns(f: &DMatrix<f64>, weight: &DMatrix<f64>, inverse: bool) -> Result<DMatrix<f64>> {
    if f.ncols() == 0 {
        return Ok(f.clone());
    }
    let chol = weight.clone().cholesky().ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
    let l = chol.l();
    if inverse {
        let t = l.solve_lower_triangular(&f.transpose()).ok_or(Error::SingularCoreUpdate)?;
        Ok(t.transpose())
    } else {
        Ok(f * l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DreOptions {
    /// Relative eigenvalue cut-off of every compression.
    pub compress_tol: f64,
    /// Maximum rank after compression; `None` selects [`default_rank_cap`].
    pub rank_cap: Option<usize>,
    /// Keep every `store_stride`-th time node (node 0 and the final node always).
    pub store_stride: usize,
}

impl Default for DreOptions {
    fn default() -> Self {
        Self { compress_tol: 1e-10, rank_cap: None, store_stride: 1 }
    }
}

/// A quarter of the unknowns, but never fewer than `min(n, 64)`.
pub fn default_rank_cap(n: usize) -> usize {
    (n / 4).max(n.min(64))
}

/// One stored time node: `P^m = L D Lᵀ` in nodal coefficients together with
/// the feedback gains `R⁻¹BᵀP^mM` and `R_b⁻¹B_bᵀP^mM`.
#[derive(Debug, Clone)]
pub struct RiccatiNode {
    pub step: usize,
    pub solution: LowRankSymmetric,
    pub gain: DMatrix<f64>,
    pub boundary_gain: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    pub grid: Option<FemGrid>,
    pub dt: f64,
    pub final_time: f64,
    /// Boundary input columns `B_b` of the problem, needed for error measurement.
    pub boundary_input: DMatrix<f64>,
    pub nodes: Vec<RiccatiNode>,
    pub max_rank: usize,
}

impl RiccatiTrajectory {
    pub fn n_steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }

    /// Stored node at exactly time `t`.
    pub fn node_at(&self, t: f64) -> Result<&RiccatiNode> {
        let m = t / self.dt;
        if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(Error::TimeNotOnGrid { t });
        }
        let m = m.round() as usize;
        self.nodes.iter().find(|n| n.step == m).ok_or(Error::TimeNotOnGrid { t })
    }

    /// Node with the largest stored time `≤ t` (left-constant sampling).
    pub fn node_before(&self, t: f64) -> &RiccatiNode {
        let m = ((t / self.dt) * (1.0 + 1e-12)).floor().max(0.0) as usize;
        let idx = self.nodes.partition_point(|n| n.step <= m);
        &self.nodes[idx.saturating_sub(1)]
    }

    pub fn solution_at(&self, t: f64) -> Result<&LowRankSymmetric> {
        Ok(&self.node_at(t)?.solution)
    }
}

fn gains(problem: &DreProblem, p: &LowRankSymmetric) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = problem.n();
    if p.rank() == 0 {
        return Ok((DMatrix::zeros(problem.input.ncols(), n), DMatrix::zeros(problem.boundary_input.ncols(), n)));
    }
    let tail = p.core() * problem.mass.mul_dense(p.factor()).transpose();
    let apply = |b: &DMatrix<f64>, w: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        if b.ncols() == 0 {
            return Ok(DMatrix::zeros(0, n));
        }
        let raw = b.tr_mul(p.factor()) * &tail;
        w.clone().cholesky().map(|c| c.solve(&raw)).ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })
    };
    Ok((apply(&problem.input, &problem.input_weight)?, apply(&problem.boundary_input, &problem.boundary_weight)?))
}

/// Strang splitting in reversed time `τ = T − t`: half a step of the exact
/// quadratic flow, a full step of the exact affine flow, another half step
/// of the quadratic flow. The stored trajectory is indexed by forward time.
pub fn solve_dre(problem: &DreProblem, options: &DreOptions) -> Result<RiccatiTrajectory> {
    problem.validate()?;
    if !(options.compress_tol >= 0.0) || options.store_stride == 0 {
        return Err(Error::InvalidArgument("compress_tol must be ≥ 0 and store_stride ≥ 1".into()));
    }
    let n = problem.n();
    let cap = options.rank_cap.unwrap_or_else(|| default_rank_cap(n));
    let basis = SpectralBasis::new(&problem.mass, &problem.stiffness)?;
    let input = basis.load_to_spectral(&problem.input_factor()?);
    let source = basis.load_to_spectral(&problem.source_factor()?);
    let dt = problem.dt;
    let integral = source_integral(&basis, &source, dt, (options.compress_tol * 1e-3).max(1e-15));

    let steps = problem.n_steps();
    let keep = |m: usize| m % options.store_stride == 0 || m == 0 || m == steps;
    let mut nodes = Vec::new();
    let mut store = |m: usize, z: &LowRankSymmetric| -> Result<()> {
        let solution = basis.to_nodal(z)?;
        let (gain, boundary_gain) = gains(problem, &solution)?;
        nodes.push(RiccatiNode { step: m, solution, gain, boundary_gain });
        Ok(())
    };

    let mut z = LowRankSymmetric::zeros(n);
    let mut max_rank = 0;
    store(steps, &z)?;
    for k in 1..=steps {
        let half = quadratic_flow(&z, &input, 0.5 * dt)?;
        let affine = lyapunov_flow(&basis, &half, dt, &integral, options.compress_tol)?;
        z = quadratic_flow(&affine, &input, 0.5 * dt)?;
        if z.rank() > cap {
            return Err(Error::RankExplosion { rank: z.rank(), cap });
        }
        max_rank = max_rank.max(z.rank());
        let m = steps - k;
        if keep(m) {
            store(m, &z)?;
        }
    }
    nodes.reverse();
    Ok(RiccatiTrajectory {
        grid: problem.grid,
        dt,
        final_time: problem.final_time,
        boundary_input: problem.boundary_input.clone(),
        nodes,
        max_rank,
    })
}
