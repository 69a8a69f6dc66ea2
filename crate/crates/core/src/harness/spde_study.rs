use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::StudyKind;
use super::plan::{ExperimentPlan, SimulationPlan, StudyPoint};
use super::report::{ConvergenceReport, ReportRow};
use super::riccati_study::{solve_riccati_at, thread_pool};
use crate::control::{OperatorSet, ProblemSetup};
use crate::error::{Error, Result};
use crate::fem::{mass_inner, FemField, L2Projector};
use crate::noise::{coarsen_noise, NoiseIncrement, NoiseSampler};
use crate::riccati::RiccatiTrajectory;
use crate::stepper::{simulate_path, write_state_record, RunConfig, SpdeSystem};

/// Everything one resolution needs, shared read-only by all paths.
struct LevelModel {
    point: StudyPoint,
    setup: ProblemSetup,
    ops: OperatorSet,
    system: SpdeSystem,
    riccati: Option<RiccatiTrajectory>,
    initial: FemField,
}

impl LevelModel {
    fn new(point: StudyPoint, plan: &ExperimentPlan, controlled: bool) -> Result<Self> {
        let setup = ProblemSetup::default_for(point.grid()?);
        let ops = OperatorSet::assemble(&setup)?;
        let system = SpdeSystem::new(setup.grid, &ops, point.dt())?;
        let riccati = if controlled {
            // Riccati step min(Δt, 2^{-r}), stored at the run's step nodes
            let exp = point.dt_exponent.max(plan.riccati_dt_exponent);
            let stride = 1usize << (exp - point.dt_exponent);
            Some(solve_riccati_at(point, 0.5f64.powi(exp as i32), plan.final_time, stride, plan.compress_tol)?)
        } else {
            None
        };
        let initial = plan.initial.field(&setup)?;
        Ok(Self { point, setup, ops, system, riccati, initial })
    }

    fn run(&self, final_time: f64, controlled: bool, noise: &[NoiseIncrement]) -> Result<FemField> {
        let cfg = RunConfig {
            final_time,
            initial: self.initial.clone(),
            riccati: if controlled { self.riccati.as_ref() } else { None },
        };
        simulate_path(&self.system, &cfg, |m| Ok(noise[m].clone()), |_| Ok(()))
    }
}

/// Squared H-errors of one path at every study point.
struct PathErrors {
    controlled: Vec<f64>,
    uncontrolled: Vec<f64>,
}

fn run_path(
    plan: &ExperimentPlan,
    sampler: &NoiseSampler,
    reference: &LevelModel,
    levels: &[(LevelModel, L2Projector)],
    path: u64,
) -> Result<PathErrors> {
    let dt_ref = plan.reference.dt();
    let n_ref = (plan.final_time / dt_ref).round() as usize;
    let fine: Vec<NoiseIncrement> = (0..n_ref).map(|m| sampler.sample(path, m as u64, dt_ref)).collect::<Result<_>>()?;
    let y_ref = [reference.run(plan.final_time, true, &fine)?, reference.run(plan.final_time, false, &fine)?];
    let mut out = PathErrors { controlled: Vec::new(), uncontrolled: Vec::new() };
    for (model, projector) in levels {
        if model.point == plan.reference {
            out.controlled.push(0.0);
            out.uncontrolled.push(0.0);
            continue;
        }
        let ratio = 1usize << (plan.reference.dt_exponent - model.point.dt_exponent);
        let coarse: Vec<NoiseIncrement> =
            fine.chunks(ratio).map(|chunk| coarsen_noise(chunk, projector)).collect::<Result<_>>()?;
        for (controlled, slot) in [(true, &mut out.controlled), (false, &mut out.uncontrolled)] {
            let y = model.run(plan.final_time, controlled, &coarse)?;
            let lifted = projector.prolongation().mul_vec(y.values());
            let diff = y_ref[usize::from(!controlled)].values() - lifted;
            slot.push(mass_inner(&reference.ops.mass, &diff, &diff));
        }
    }
    Ok(out)
}

/// `(sqrt(mean), standard error of sqrt(mean))` of squared errors, the
/// latter by the delta method.
fn rms_with_stderr(squares: &[f64]) -> (f64, Option<f64>) {
    let n = squares.len() as f64;
    let mean = squares.iter().sum::<f64>() / n;
    let rms = mean.sqrt();
    if squares.len() < 2 {
        return (rms, None);
    }
    let var = squares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se_mean = (var / n).sqrt();
    (rms, Some(if rms > 0.0 { se_mean / (2.0 * rms) } else { 0.0 }))
}

/// Coupled study: every path samples noise once on the reference
/// resolution and every study point consumes its coarsened sum.
pub fn run_spde_study(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    if plan.kind != StudyKind::SpdeCoupled {
        return Err(Error::Config("run_spde_study needs an spde_coupled plan".into()));
    }
    plan.validate()?;
    let start = Instant::now();
    let pool = thread_pool(plan.workers)?;
    let ref_grid = plan.reference.grid()?;
    let (reference, levels) = pool.install(|| -> Result<_> {
        let reference = LevelModel::new(plan.reference, plan, true)?;
        let levels = plan
            .points
            .par_iter()
            .map(|&p| Ok((LevelModel::new(p, plan, true)?, L2Projector::new(ref_grid, p.grid()?)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((reference, levels))
    })?;
    let sampler = NoiseSampler::new(&reference.setup, &plan.noise)?;
    let per_path: Vec<PathErrors> = pool.install(|| {
        (0..plan.n_paths as u64)
            .into_par_iter()
            .map(|path| run_path(plan, &sampler, &reference, &levels, path))
            .collect::<Result<_>>()
    })?;

    let rows = plan
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ctrl: Vec<f64> = per_path.iter().map(|e| e.controlled[i]).collect();
            let unctrl: Vec<f64> = per_path.iter().map(|e| e.uncontrolled[i]).collect();
            let (error, stderr) = rms_with_stderr(&ctrl);
            let (secondary_error, secondary_stderr) = rms_with_stderr(&unctrl);
            ReportRow {
                level: p.level,
                h: p.h(),
                dt: p.dt(),
                error,
                secondary_error,
                stderr,
                secondary_stderr,
                n_paths: Some(plan.n_paths),
            }
        })
        .collect();
    Ok(ConvergenceReport::new(plan.kind, rows, start.elapsed().as_secs_f64(), plan.config.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRow {
    pub path: u64,
    /// `‖y(T)‖_H`.
    pub terminal_norm: f64,
    /// `Σ_m Δt ‖C y^m‖²` over `m = 1..M`.
    pub output_energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub level: u32,
    pub dt: f64,
    pub controlled: bool,
    pub rows: Vec<SimulationRow>,
    pub runtime_seconds: f64,
}

impl SimulationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,level,dt,controlled,terminal_norm,output_energy\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.17e},{},{:.17e},{:.17e}",
                r.path, self.level, self.dt, self.controlled, r.terminal_norm, r.output_energy
            );
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.into()))?;
        std::fs::write(dir.join("report.json"), json)?;
        Ok(())
    }
}

/// Runs `plan.n_paths` independent paths at one resolution. With `dump`,
/// every state of every path is written as a binary record, paths in
/// ascending order.
pub fn run_simulation(plan: &SimulationPlan, dump: Option<&mut dyn Write>) -> Result<SimulationReport> {
    let start = Instant::now();
    let experiment = ExperimentPlan {
        kind: StudyKind::SpdeCoupled,
        points: vec![plan.point],
        reference: plan.point,
        final_time: plan.final_time,
        n_paths: plan.n_paths,
        coupling: super::config::Coupling::HEqDt,
        riccati_dt_exponent: plan.riccati_dt_exponent,
        noise: plan.noise.clone(),
        compress_tol: plan.compress_tol,
        initial: plan.initial,
        workers: plan.workers,
        config: Default::default(),
    };
    experiment.validate()?;
    let pool = thread_pool(plan.workers)?;
    let model = pool.install(|| LevelModel::new(plan.point, &experiment, plan.controlled))?;
    let sampler = NoiseSampler::new(&model.setup, &plan.noise)?;
    let dt = plan.point.dt();
    let keep = dump.is_some();
    let results: Vec<(SimulationRow, Vec<u8>)> = pool.install(|| {
        (0..plan.n_paths as u64)
            .into_par_iter()
            .map(|path| {
                let mut energy = 0.0;
                let mut records = Vec::new();
                let cfg = RunConfig { final_time: plan.final_time, initial: model.initial.clone(), riccati: model.riccati.as_ref() };
                let y = simulate_path(&model.system, &cfg, |m| sampler.sample(path, m as u64, dt), |state| {
                    if state.step > 0 {
                        energy += dt * (&model.ops.output * state.y.values()).norm_squared();
                    }
                    if keep {
                        write_state_record(&mut records, path, state)?;
                    }
                    Ok(())
                })?;
                let terminal_norm = mass_inner(&model.ops.mass, y.values(), y.values()).sqrt();
                Ok((SimulationRow { path, terminal_norm, output_energy: energy }, records))
            })
            .collect::<Result<_>>()
    })?;
    if let Some(out) = dump {
        for (_, records) in &results {
            out.write_all(records)?;
        }
        out.flush()?;
    }
    Ok(SimulationReport {
        level: plan.point.level,
        dt,
        controlled: plan.controlled,
        rows: results.into_iter().map(|(r, _)| r).collect(),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
