//! Linear implicit Euler for the controlled stochastic heat equation:
//! `(M − Δt A) ŷ^{m+1} = M ŷ^m − Δt B K^m ŷ^m − Δt B_b K_b^m ŷ^m + M δW^m + B_b δW_b^m`.

use std::io::Write;

use nalgebra::DVector;

use crate::control::OperatorSet;
use crate::error::{Error, Result};
use crate::fem::{FemField, FemGrid};
use crate::linalg::{power_iteration_m_norm, spd_factorize, SparseMatrix, SpdFactorization};
use crate::noise::NoiseIncrement;
use crate::riccati::RiccatiTrajectory;

/// Matrices and the factorized propagator for one `(grid, Δt)`.
#[derive(Debug, Clone)]
pub struct SpdeSystem {
    grid: FemGrid,
    dt: f64,
    mass: SparseMatrix,
    input: SparseMatrix,
    boundary_input: DVector<f64>,
    propagator: SpdFactorization,
}

impl SpdeSystem {
    pub fn new(grid: FemGrid, ops: &OperatorSet, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if ops.mass.n_rows() != grid.n_nodes() {
            return Err(Error::DimensionMismatch("operators belong to a different grid".into()));
        }
        let propagator = spd_factorize(&ops.mass.linear_combination(1.0, &ops.stiffness, -dt)?)?;
        Ok(Self {
            grid,
            dt,
            mass: ops.mass.clone(),
            input: ops.input.clone(),
            boundary_input: ops.boundary_input.clone(),
            propagator,
        })
    }

    pub fn grid(&self) -> FemGrid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    /// `(M − Δt A)⁻¹ M y`.
    pub fn propagate(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.propagator.solve(&self.mass.mul_vec(y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub step: usize,
    pub y: FemField,
}

/// Feedback gains `K = R⁻¹BᵀPM` and `K_b = R_b⁻¹B_bᵀPM` at one node.
#[derive(Debug, Clone, Copy)]
pub struct Gains<'a> {
    pub input: &'a nalgebra::DMatrix<f64>,
    pub boundary: &'a nalgebra::DMatrix<f64>,
}

pub fn step(system: &SpdeSystem, state: &PathState, gains: Option<Gains<'_>>, noise: &NoiseIncrement) -> Result<PathState> {
    if (noise.dt - system.dt).abs() > 1e-12 * system.dt {
        return Err(Error::InvalidArgument(format!("noise step {} differs from run step {}", noise.dt, system.dt)));
    }
    if noise.grid() != system.grid || state.y.grid() != system.grid {
        return Err(Error::DimensionMismatch("state, noise and system grids differ".into()));
    }
    let y = state.y.values();
    let mut rhs = system.mass.mul_vec(&(y + noise.distributed.values())) + &noise.boundary_load;
    if let Some(g) = gains {
        let u = g.input * y;
        let v = g.boundary * y;
        rhs -= system.input.mul_vec(&u) * system.dt;
        rhs -= &system.boundary_input * (v[0] * system.dt);
    }
    Ok(PathState { step: state.step + 1, y: FemField::new(system.grid, system.propagator.solve(&rhs)?)? })
}

#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub final_time: f64,
    pub initial: FemField,
    /// Feedback trajectory; `None` runs the uncontrolled system.
    pub riccati: Option<&'a RiccatiTrajectory>,
}

impl RunConfig<'_> {
    pub fn n_steps(&self, dt: f64) -> Result<usize> {
        let steps = self.final_time / dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
            return Err(Error::InvalidArgument(format!("step {dt} does not divide final time {}", self.final_time)));
        }
        Ok(steps.round() as usize)
    }
}

/// Runs `T/Δt` steps from the initial field, drawing the increment for step
/// `m` from `noise(m)` and reporting every state (including the initial one)
/// to `observe`.
pub fn simulate_path(
    system: &SpdeSystem,
    config: &RunConfig<'_>,
    mut noise: impl FnMut(usize) -> Result<NoiseIncrement>,
    mut observe: impl FnMut(&PathState) -> Result<()>,
) -> Result<FemField> {
    let steps = config.n_steps(system.dt)?;
    if config.initial.grid() != system.grid {
        return Err(Error::DimensionMismatch("initial condition lives on a different grid".into()));
    }
    if let Some(traj) = config.riccati {
        if traj.grid.is_some_and(|g| g != system.grid) {
            return Err(Error::DimensionMismatch("Riccati trajectory lives on a different grid".into()));
        }
        if (traj.final_time - config.final_time).abs() > 1e-12 {
            return Err(Error::InvalidArgument("Riccati and run final times differ".into()));
        }
    }
    let mut state = PathState { step: 0, y: config.initial.clone() };
    observe(&state)?;
    for m in 0..steps {
        let gains = config.riccati.map(|traj| {
            let node = traj.node_before(m as f64 * system.dt);
            Gains { input: &node.gain, boundary: &node.boundary_gain }
        });
        state = step(system, &state, gains, &noise(m)?)?;
        observe(&state)?;
    }
    Ok(state.y)
}

/// Binary state record: path, step and length as `u64`, then the values as
/// little-endian `f64`.
pub fn write_state_record(out: &mut impl Write, path: u64, state: &PathState) -> Result<()> {
    let values = state.y.values();
    for w in [path, state.step as u64, values.len() as u64] {
        out.write_all(&w.to_le_bytes())?;
    }
    for v in values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// L(H) norm of `y ↦ (M − Δt A)⁻¹ M y` by power iteration.
pub fn propagator_contraction(grid: FemGrid, dt: f64, diffusion: f64, tol: f64) -> Result<f64> {
    let mass = crate::fem::assemble_mass(&grid);
    let stiffness = crate::fem::assemble_stiffness(&grid, diffusion)?;
    let factor = spd_factorize(&mass.linear_combination(1.0, &stiffness, -dt)?)?;
    let apply = |y: &DVector<f64>| factor.solve(&mass.mul_vec(y));
    power_iteration_m_norm(&mass, apply, apply, tol)
}
