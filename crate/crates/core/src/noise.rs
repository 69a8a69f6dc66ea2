//! Truncated Karhunen–Loève sampling of distributed and boundary Wiener
//! increments with counter-keyed random streams.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::control::{build_boundary_input, ProblemSetup};
use crate::error::{Error, Result};
use crate::fem::{FemField, FemGrid, L2Projector};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub beta: f64,
    pub eps: f64,
    /// Highest cosine index per direction; `None` means the grid's `n_per_side`.
    pub n_modes_distributed: Option<usize>,
    /// Boundary modes `1..=n` per edge; `None` means the grid's `n_per_side`.
    pub n_modes_boundary: Option<usize>,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { beta: 1.0, eps: 1e-4, n_modes_distributed: None, n_modes_boundary: None, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise decay needs beta > 0 and eps > 0, got {} and {}",
                self.beta, self.eps
            )));
        }
        if self.n_modes_distributed == Some(0) || self.n_modes_boundary == Some(0) {
            return Err(Error::InvalidArgument("noise mode counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn distributed_modes(&self, grid: &FemGrid) -> usize {
        self.n_modes_distributed.unwrap_or(grid.n_per_side())
    }

    pub fn boundary_modes(&self, grid: &FemGrid) -> usize {
        self.n_modes_boundary.unwrap_or(grid.n_per_side())
    }

    /// `(j² + k²)^{−β−ε}`, zero for the constant mode.
    pub fn distributed_eigenvalue(&self, j: usize, k: usize) -> f64 {
        if j == 0 && k == 0 {
            return 0.0;
        }
        ((j * j + k * k) as f64).powf(-self.beta - self.eps)
    }

    /// `k^{−β−ε}` for `k ≥ 1`.
    pub fn boundary_weight(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        (k as f64).powf(-self.beta - self.eps)
    }

    /// `Σ_{j,k ≤ n} λ_{j,k}`.
    pub fn trace(&self, n: usize) -> f64 {
        (0..=n).flat_map(|j| (0..=n).map(move |k| (j, k))).map(|(j, k)| self.distributed_eigenvalue(j, k)).sum()
    }
}

/// Substream labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamLabel {
    Distributed,
    Boundary(usize),
}

impl StreamLabel {
    fn code(self) -> u64 {
        match self {
            StreamLabel::Distributed => 0,
            StreamLabel::Boundary(edge) => 1 + edge as u64,
        }
    }
}

/// Gaussian draws keyed by `(seed, path, step, label)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    pub seed: u64,
    pub path: u64,
}

impl RandomStream {
    pub fn new(seed: u64, path: u64) -> Self {
        Self { seed, path }
    }

    fn rng(&self, step: u64, label: StreamLabel) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (i, word) in [self.seed, self.path, step, label.code()].iter().enumerate() {
            key[8 * i..8 * i + 8].copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// Independent uniforms strictly inside (0, 1).
    pub fn uniforms(&self, step: u64, label: StreamLabel, count: usize) -> Vec<f64> {
        let mut rng = self.rng(step, label);
        (0..count).map(|_| ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)).collect()
    }

    /// Standard normals by inverse-CDF transform of [`Self::uniforms`].
    pub fn gaussians(&self, step: u64, label: StreamLabel, count: usize) -> Vec<f64> {
        let normal = Normal::standard();
        self.uniforms(step, label, count).into_iter().map(|u| normal.inverse_cdf(u)).collect()
    }
}

/// One step of noise on a grid. The distributed part is a nodal field; the
/// boundary part is kept as the load vector `B^b δW_b` so it can be added
/// to the right-hand side without a mass solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub distributed: FemField,
    pub boundary_load: DVector<f64>,
    pub dt: f64,
}

impl NoiseIncrement {
    pub fn zeros(grid: FemGrid, dt: f64) -> Self {
        Self { distributed: FemField::zeros(grid), boundary_load: DVector::zeros(grid.n_nodes()), dt }
    }

    pub fn grid(&self) -> FemGrid {
        self.distributed.grid()
    }
}

/// Nodal evaluation of `Σ √λ_{j,k} cos(jπx₁) cos(kπx₂) ξ_{j,k}` as
/// `T Ξ Tᵀ` with a one-dimensional cosine table `T`.
#[derive(Debug, Clone)]
pub struct DistributedSampler {
    grid: FemGrid,
    cos_table: DMatrix<f64>,
    sqrt_eigs: DMatrix<f64>,
}

impl DistributedSampler {
    pub fn new(grid: FemGrid, spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let modes = spec.distributed_modes(&grid) + 1;
        let n = grid.n_per_side();
        let h = grid.h();
        let cos_table = DMatrix::from_fn(n, modes, |a, j| (j as f64 * std::f64::consts::PI * a as f64 * h).cos());
        let sqrt_eigs = DMatrix::from_fn(modes, modes, |j, k| spec.distributed_eigenvalue(j, k).sqrt());
        Ok(Self { grid, cos_table, sqrt_eigs })
    }

    pub fn n_coefficients(&self) -> usize {
        self.sqrt_eigs.len()
    }

    /// Field for given standard-normal coefficients `xi[j + (N+1) k]`.
    pub fn field_from(&self, xi: &[f64], dt: f64) -> Result<FemField> {
        let modes = self.sqrt_eigs.nrows();
        if xi.len() != modes * modes {
            return Err(Error::DimensionMismatch(format!("{} coefficients for {} modes", xi.len(), modes * modes)));
        }
        let scaled = DMatrix::from_fn(modes, modes, |j, k| self.sqrt_eigs[(j, k)] * xi[j + modes * k] * dt.sqrt());
        // values[a, b] at node (a h, b h): T Ξ Tᵀ, stored column-major = index b n + a
        let values = &self.cos_table * scaled * self.cos_table.transpose();
        FemField::new(self.grid, DVector::from_column_slice(values.as_slice()))
    }

    pub fn sample(&self, stream: &RandomStream, step: u64, dt: f64) -> Result<FemField> {
        let xi = stream.gaussians(step, StreamLabel::Distributed, self.n_coefficients());
        self.field_from(&xi, dt)
    }
}

/// `Σ_edges Σ_k √dt λ_k ξ_{edge,k} (B^b column for edge, k)`.
#[derive(Debug, Clone)]
pub struct BoundarySampler {
    columns: DMatrix<f64>,
    weights: Vec<f64>,
}

impl BoundarySampler {
    pub fn new(setup: &ProblemSetup, spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let modes = spec.boundary_modes(&setup.grid);
        let columns = build_boundary_input(setup, modes)?;
        Ok(Self::from_columns(columns, (1..=modes).map(|k| spec.boundary_weight(k)).collect()))
    }

    /// Columns ordered edge by edge, `weights.len()` modes per edge.
    pub fn from_columns(columns: DMatrix<f64>, weights: Vec<f64>) -> Self {
        Self { columns, weights }
    }

    pub fn modes_per_edge(&self) -> usize {
        self.weights.len()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn load_from(&self, xi_per_edge: &[Vec<f64>], dt: f64) -> DVector<f64> {
        let nb = self.weights.len();
        let mut coeffs = DVector::zeros(self.columns.ncols());
        for (e, xi) in xi_per_edge.iter().enumerate() {
            for k in 0..nb {
                coeffs[e * nb + k] = dt.sqrt() * self.weights[k] * xi[k];
            }
        }
        &self.columns * coeffs
    }

    pub fn sample(&self, stream: &RandomStream, step: u64, dt: f64) -> DVector<f64> {
        let nb = self.weights.len();
        let xi: Vec<Vec<f64>> = (0..4).map(|e| stream.gaussians(step, StreamLabel::Boundary(e), nb)).collect();
        self.load_from(&xi, dt)
    }
}

/// Distributed plus boundary sampling on one grid.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    distributed: DistributedSampler,
    boundary: BoundarySampler,
    seed: u64,
}

impl NoiseSampler {
    pub fn new(setup: &ProblemSetup, spec: &NoiseSpec) -> Result<Self> {
        Ok(Self {
            distributed: DistributedSampler::new(setup.grid, spec)?,
            boundary: BoundarySampler::new(setup, spec)?,
            seed: spec.seed,
        })
    }

    pub fn grid(&self) -> FemGrid {
        self.distributed.grid
    }

    pub fn distributed(&self) -> &DistributedSampler {
        &self.distributed
    }

    pub fn boundary(&self) -> &BoundarySampler {
        &self.boundary
    }

    pub fn stream(&self, path: u64) -> RandomStream {
        RandomStream::new(self.seed, path)
    }

    pub fn sample(&self, path: u64, step: u64, dt: f64) -> Result<NoiseIncrement> {
        let stream = self.stream(path);
        Ok(NoiseIncrement {
            distributed: self.distributed.sample(&stream, step, dt)?,
            boundary_load: self.boundary.sample(&stream, step, dt),
            dt,
        })
    }
}

/// Sums consecutive fine increments and moves them to the coarse grid:
/// the distributed field by L² projection, the boundary load by `Iᵀ`
/// (which is the coarse mass matrix times the L² projection of the
/// represented function).
pub fn coarsen_noise(fine: &[NoiseIncrement], projector: &L2Projector) -> Result<NoiseIncrement> {
    let first = fine.first().ok_or_else(|| Error::InvalidArgument("no increments to coarsen".into()))?;
    let grid = first.grid();
    if grid != projector.fine() {
        return Err(Error::GridNotNested { from: grid.level(), to: projector.coarse().level() });
    }
    let mut dist = DVector::zeros(grid.n_nodes());
    let mut bnd = DVector::zeros(grid.n_nodes());
    let mut dt = 0.0;
    for inc in fine {
        if inc.grid() != grid {
            return Err(Error::DimensionMismatch("increments on different grids".into()));
        }
        dist += inc.distributed.values();
        bnd += &inc.boundary_load;
        dt += inc.dt;
    }
    Ok(NoiseIncrement {
        distributed: projector.project(&FemField::new(grid, dist)?)?,
        boundary_load: projector.restrict_load(&bnd),
        dt,
    })
}

/// Binary record: path, step and length as `u64`, then the distributed
/// values and the boundary load as little-endian `f64`.
pub fn write_noise_record(out: &mut impl Write, path: u64, step: u64, inc: &NoiseIncrement) -> Result<()> {
    let n = inc.distributed.values().len() as u64;
    for w in [path, step, n] {
        out.write_all(&w.to_le_bytes())?;
    }
    for v in inc.distributed.values().iter().chain(inc.boundary_load.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
