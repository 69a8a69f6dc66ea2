//! Convergence experiments and report emission.

mod config;
mod fit;
mod plan;
mod report;
mod riccati_study;
mod spde_study;

pub use config::{Coupling, ExperimentConfig, InitialCondition, StudyKind};
pub use fit::fit_order;
pub use plan::{ExperimentPlan, SimulationPlan, StudyPoint};
pub use report::{ConvergenceReport, ReportRow, CSV_HEADER};
pub use riccati_study::{run_riccati_study, solve_riccati_at};
pub use spde_study::{run_simulation, run_spde_study, SimulationReport, SimulationRow};
