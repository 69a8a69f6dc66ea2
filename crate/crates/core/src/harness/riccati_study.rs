use std::time::Instant;

use rayon::prelude::*;

use super::config::StudyKind;
use super::plan::{ExperimentPlan, StudyPoint};
use super::report::{ConvergenceReport, ReportRow};
use crate::control::{OperatorSet, ProblemSetup};
use crate::error::{Error, Result};
use crate::riccati::{riccati_error, solve_dre, DreOptions, DreProblem, RiccatiTrajectory};

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))
}

/// Solves the default control problem's Riccati equation on `point`'s grid
/// with step `dt`, keeping every `stride`-th node.
pub fn solve_riccati_at(point: StudyPoint, dt: f64, final_time: f64, stride: usize, compress_tol: f64) -> Result<RiccatiTrajectory> {
    let setup = ProblemSetup::default_for(point.grid()?);
    let ops = OperatorSet::assemble(&setup)?;
    let problem = DreProblem::from_operators(setup.grid, &ops, final_time, dt)?;
    solve_dre(&problem, &DreOptions { compress_tol, rank_cap: None, store_stride: stride.max(1) })
}

fn solve_initial(plan: &ExperimentPlan, point: StudyPoint) -> Result<RiccatiTrajectory> {
    let steps = (plan.final_time / point.dt()).round() as usize;
    solve_riccati_at(point, point.dt(), plan.final_time, steps, plan.compress_tol)
}

/// Errors of `P(0)` at every study point against the reference solve.
pub fn run_riccati_study(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    if !matches!(plan.kind, StudyKind::RiccatiTemporal | StudyKind::RiccatiSpatial) {
        return Err(Error::Config("run_riccati_study needs a Riccati plan".into()));
    }
    plan.validate()?;
    let start = Instant::now();
    let pool = thread_pool(plan.workers)?;
    let all: Vec<StudyPoint> = std::iter::once(plan.reference).chain(plan.points.iter().copied()).collect();
    let solved: Vec<RiccatiTrajectory> =
        pool.install(|| all.par_iter().map(|&p| solve_initial(plan, p)).collect::<Result<_>>())?;
    let reference = &solved[0];
    let rows = plan
        .points
        .iter()
        .zip(&solved[1..])
        .map(|(p, traj)| {
            let e = riccati_error(traj, reference, 0.0)?;
            Ok(ReportRow {
                level: p.level,
                h: p.h(),
                dt: p.dt(),
                error: e.operator,
                secondary_error: e.boundary,
                stderr: None,
                secondary_stderr: None,
                n_paths: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::new(plan.kind, rows, start.elapsed().as_secs_f64(), plan.config.clone()))
}
