use serde::Serialize;

use super::config::{Coupling, ExperimentConfig, InitialCondition, StudyKind};
use crate::control::ProblemSetup;
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, load_vector, FemField, FemGrid};
use crate::linalg::spd_factorize;
use crate::noise::NoiseSpec;

/// A `(level, Δt = 2^{-dt_exponent})` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StudyPoint {
    pub level: u32,
    pub dt_exponent: u32,
}

impl StudyPoint {
    pub fn h(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn dt(&self) -> f64 {
        0.5f64.powi(self.dt_exponent as i32)
    }

    pub fn grid(&self) -> Result<FemGrid> {
        FemGrid::new(self.level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub kind: StudyKind,
    pub points: Vec<StudyPoint>,
    pub reference: StudyPoint,
    pub final_time: f64,
    pub n_paths: usize,
    pub coupling: Coupling,
    /// Riccati solves use `Δt_R = min(Δt, 2^{-riccati_dt_exponent})`.
    pub riccati_dt_exponent: u32,
    pub noise: NoiseSpec,
    pub compress_tol: f64,
    pub initial: InitialCondition,
    pub workers: usize,
    pub config: ExperimentConfig,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn noise_spec(cfg: &ExperimentConfig) -> NoiseSpec {
    NoiseSpec {
        beta: cfg.beta.unwrap_or(1.0),
        eps: cfg.eps.unwrap_or(1e-4),
        n_modes_distributed: cfg.distributed_modes,
        n_modes_boundary: cfg.boundary_modes,
        seed: cfg.seed.unwrap_or(0),
    }
}

impl ExperimentPlan {
    /// Riccati convergence plan; `kind` defaults to the temporal study.
    pub fn riccati(cfg: &ExperimentConfig) -> Result<Self> {
        let kind = cfg.kind.unwrap_or(StudyKind::RiccatiTemporal);
        let (points, reference) = match kind {
            StudyKind::RiccatiTemporal => {
                let level = cfg.level.unwrap_or(4);
                let exps = cfg.dt_exponents.clone().unwrap_or_else(|| (2..=7).collect());
                let points = exps.iter().map(|&e| StudyPoint { level, dt_exponent: e }).collect();
                (points, StudyPoint { level, dt_exponent: cfg.reference_dt_exponent.unwrap_or(9) })
            }
            StudyKind::RiccatiSpatial => {
                let e = cfg.dt_exponent.unwrap_or(9);
                let levels = cfg.levels.clone().unwrap_or_else(|| (1..=4).collect());
                let points = levels.iter().map(|&l| StudyPoint { level: l, dt_exponent: e }).collect();
                (points, StudyPoint { level: cfg.reference_level.unwrap_or(5), dt_exponent: e })
            }
            StudyKind::SpdeCoupled => {
                return Err(Error::Config("riccati-conv needs kind riccati_temporal or riccati_spatial".into()))
            }
        };
        Self::build(kind, points, reference, cfg)
    }

    /// Coupled SPDE plan with `Δt = 2^{-j}` and the configured `h(Δt)`.
    pub fn spde(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.kind.is_some_and(|k| k != StudyKind::SpdeCoupled) {
            return Err(Error::Config("spde-conv needs kind spde_coupled".into()));
        }
        let coupling = cfg.coupling.unwrap_or(Coupling::HEqDt);
        let exps = cfg.dt_exponents.clone().unwrap_or_else(|| (1..=4).collect());
        let point = |e: u32| StudyPoint { level: coupling.level(e), dt_exponent: e };
        let points = exps.iter().map(|&e| point(e)).collect();
        let reference = point(cfg.reference_dt_exponent.unwrap_or(5));
        Self::build(StudyKind::SpdeCoupled, points, reference, cfg)
    }

    fn build(kind: StudyKind, points: Vec<StudyPoint>, reference: StudyPoint, cfg: &ExperimentConfig) -> Result<Self> {
        let plan = Self {
            kind,
            points,
            reference,
            final_time: cfg.final_time.unwrap_or(1.0),
            n_paths: cfg.paths.unwrap_or(20),
            coupling: cfg.coupling.unwrap_or(Coupling::HEqDt),
            riccati_dt_exponent: cfg.riccati_dt_exponent.unwrap_or(6),
            noise: noise_spec(cfg),
            compress_tol: cfg.compress_tol.unwrap_or(1e-10),
            initial: cfg.initial.unwrap_or(InitialCondition::Zero),
            workers: cfg.workers.unwrap_or_else(default_workers),
            config: cfg.clone(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.points.is_empty() {
            return bad("plan has no study points".into());
        }
        if let Some(p) = self.points.iter().find(|p| p.level > self.reference.level || p.dt_exponent > self.reference.dt_exponent) {
            return bad(format!("study point {p:?} is finer than the reference {:?}", self.reference));
        }
        if self.kind == StudyKind::SpdeCoupled && self.n_paths == 0 {
            return bad("spde study needs at least one path".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.final_time > 0.0) {
            return bad(format!("final_time must be positive, got {}", self.final_time));
        }
        for p in self.points.iter().chain([&self.reference]) {
            let steps = self.final_time / p.dt();
            if (steps - steps.round()).abs() > 1e-9 * steps {
                return bad(format!("dt 2^-{} does not divide final_time {}", p.dt_exponent, self.final_time));
            }
            FemGrid::new(p.level).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Single-resolution path simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub point: StudyPoint,
    pub final_time: f64,
    pub n_paths: usize,
    pub controlled: bool,
    pub riccati_dt_exponent: u32,
    pub noise: NoiseSpec,
    pub compress_tol: f64,
    pub initial: InitialCondition,
    pub workers: usize,
}

impl SimulationPlan {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let plan = Self {
            point: StudyPoint { level: cfg.level.unwrap_or(4), dt_exponent: cfg.dt_exponent.unwrap_or(4) },
            final_time: cfg.final_time.unwrap_or(1.0),
            n_paths: cfg.paths.unwrap_or(1),
            controlled: cfg.controlled.unwrap_or(true),
            riccati_dt_exponent: cfg.riccati_dt_exponent.unwrap_or(6),
            noise: noise_spec(cfg),
            compress_tol: cfg.compress_tol.unwrap_or(1e-10),
            initial: cfg.initial.unwrap_or(InitialCondition::Zero),
            workers: cfg.workers.unwrap_or_else(default_workers),
        };
        let as_experiment = ExperimentPlan {
            kind: StudyKind::SpdeCoupled,
            points: vec![plan.point],
            reference: plan.point,
            final_time: plan.final_time,
            n_paths: plan.n_paths,
            coupling: Coupling::HEqDt,
            riccati_dt_exponent: plan.riccati_dt_exponent,
            noise: plan.noise.clone(),
            compress_tol: plan.compress_tol,
            initial: plan.initial,
            workers: plan.workers,
            config: cfg.clone(),
        };
        as_experiment.validate()?;
        Ok(plan)
    }
}

impl InitialCondition {
    /// `P_h ξ` on `grid`.
    pub fn field(self, setup: &ProblemSetup) -> Result<FemField> {
        let grid = setup.grid;
        match self {
            Self::Zero => Ok(FemField::zeros(grid)),
            Self::HotOutputs => {
                let centres: Vec<[f64; 2]> = setup
                    .output_regions
                    .iter()
                    .map(|r| [(r.x0 + r.x1) / 2.0, (r.y0 + r.y1) / 2.0])
                    .collect();
                let load = load_vector(&grid, |x| {
                    centres
                        .iter()
                        .map(|c| (-100.0 * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp())
                        .sum()
                })?;
                FemField::new(grid, spd_factorize(&assemble_mass(&grid))?.solve(&load)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_study_kind() {
        let temporal = ExperimentPlan::riccati(&ExperimentConfig::default()).unwrap();
        assert_eq!(temporal.points.len(), 6);
        assert_eq!(temporal.reference, StudyPoint { level: 4, dt_exponent: 9 });

        let cfg = ExperimentConfig { kind: Some(StudyKind::RiccatiSpatial), ..Default::default() };
        let spatial = ExperimentPlan::riccati(&cfg).unwrap();
        assert_eq!(spatial.points.iter().map(|p| p.level).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(spatial.reference, StudyPoint { level: 5, dt_exponent: 9 });

        let spde = ExperimentPlan::spde(&ExperimentConfig::default()).unwrap();
        assert_eq!(spde.reference, StudyPoint { level: 5, dt_exponent: 5 });
        assert_eq!(spde.points[0], StudyPoint { level: 1, dt_exponent: 1 });
        assert_eq!(spde.n_paths, 20);
    }

    #[test]
    fn squared_coupling_doubles_levels() {
        let cfg = ExperimentConfig {
            coupling: Some(Coupling::HEqDtSquared),
            dt_exponents: Some(vec![1, 2]),
            reference_dt_exponent: Some(3),
            ..Default::default()
        };
        let plan = ExperimentPlan::spde(&cfg).unwrap();
        assert_eq!(plan.points[1], StudyPoint { level: 4, dt_exponent: 2 });
        assert_eq!(plan.reference.level, 6);
    }

    #[test]
    fn invalid_plans_are_config_errors() {
        let spatial = ExperimentConfig { levels: Some(vec![2, 6]), kind: Some(StudyKind::RiccatiSpatial), ..Default::default() };
        assert!(ExperimentPlan::riccati(&spatial).unwrap_err().is_config());
        let spde_as_riccati = ExperimentConfig { kind: Some(StudyKind::SpdeCoupled), ..Default::default() };
        assert!(ExperimentPlan::riccati(&spde_as_riccati).unwrap_err().is_config());
        for cfg in [
            ExperimentConfig { paths: Some(0), ..Default::default() },
            ExperimentConfig { final_time: Some(0.3), ..Default::default() },
            ExperimentConfig { kind: Some(StudyKind::RiccatiTemporal), ..Default::default() },
            ExperimentConfig { workers: Some(0), ..Default::default() },
            ExperimentConfig { beta: Some(-1.0), ..Default::default() },
        ] {
            assert!(ExperimentPlan::spde(&cfg).unwrap_err().is_config(), "{cfg:?}");
        }
    }

    #[test]
    fn hot_initial_condition_is_positive_near_outputs() {
        let setup = ProblemSetup::default_for(FemGrid::new(4).unwrap());
        let f = InitialCondition::HotOutputs.field(&setup).unwrap();
        let g = setup.grid;
        assert!(f.values()[g.index(0, 0)].abs() < 1e-3);
        assert!(f.values()[g.index(9, 9)] > 0.9);
        assert_eq!(InitialCondition::Zero.field(&setup).unwrap().values().amax(), 0.0);
    }
}
