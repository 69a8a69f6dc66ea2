//! `key = value` experiment configuration with `#` comments.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    RiccatiTemporal,
    RiccatiSpatial,
    SpdeCoupled,
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riccati_temporal" => Ok(Self::RiccatiTemporal),
            "riccati_spatial" => Ok(Self::RiccatiSpatial),
            "spde_coupled" => Ok(Self::SpdeCoupled),
            _ => Err(Error::Config(format!("unknown study kind `{s}`"))),
        }
    }
}

/// How the mesh level follows the time-step exponent `j` (`Δt = 2^{-j}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `h = Δt`: level `j`.
    HEqDt,
    /// `h = Δt²`: level `2j`.
    HEqDtSquared,
}

impl Coupling {
    pub fn level(self, dt_exponent: u32) -> u32 {
        match self {
            Self::HEqDt => dt_exponent,
            Self::HEqDtSquared => 2 * dt_exponent,
        }
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h_eq_dt" => Ok(Self::HEqDt),
            "h_eq_dt2" => Ok(Self::HEqDtSquared),
            _ => Err(Error::Config(format!("unknown coupling `{s}` (expected h_eq_dt or h_eq_dt2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// Gaussian bumps centred on the three output windows.
    HotOutputs,
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "hot_outputs" => Ok(Self::HotOutputs),
            _ => Err(Error::Config(format!("unknown initial condition `{s}`"))),
        }
    }
}

/// Every recognised key; unset keys fall back to per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Option<StudyKind>,
    pub final_time: Option<f64>,
    pub level: Option<u32>,
    pub levels: Option<Vec<u32>>,
    pub reference_level: Option<u32>,
    pub dt_exponent: Option<u32>,
    pub dt_exponents: Option<Vec<u32>>,
    pub reference_dt_exponent: Option<u32>,
    pub riccati_dt_exponent: Option<u32>,
    pub coupling: Option<Coupling>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub distributed_modes: Option<usize>,
    pub boundary_modes: Option<usize>,
    pub compress_tol: Option<f64>,
    pub initial: Option<InitialCondition>,
    pub controlled: Option<bool>,
}

fn scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse `{value}` for `{key}`")))
}

fn list(line: usize, key: &str, value: &str) -> Result<Vec<u32>> {
    value.split(',').map(|v| scalar(line, key, v.trim())).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            match key {
                "kind" => cfg.kind = Some(value.parse()?),
                "final_time" => cfg.final_time = Some(scalar(line, key, value)?),
                "level" => cfg.level = Some(scalar(line, key, value)?),
                "levels" => cfg.levels = Some(list(line, key, value)?),
                "reference_level" => cfg.reference_level = Some(scalar(line, key, value)?),
                "dt_exponent" => cfg.dt_exponent = Some(scalar(line, key, value)?),
                "dt_exponents" => cfg.dt_exponents = Some(list(line, key, value)?),
                "reference_dt_exponent" => cfg.reference_dt_exponent = Some(scalar(line, key, value)?),
                "riccati_dt_exponent" => cfg.riccati_dt_exponent = Some(scalar(line, key, value)?),
                "coupling" => cfg.coupling = Some(value.parse()?),
                "paths" => cfg.paths = Some(scalar(line, key, value)?),
                "seed" => cfg.seed = Some(scalar(line, key, value)?),
                "workers" => cfg.workers = Some(scalar(line, key, value)?),
                "beta" => cfg.beta = Some(scalar(line, key, value)?),
                "eps" => cfg.eps = Some(scalar(line, key, value)?),
                "distributed_modes" => cfg.distributed_modes = Some(scalar(line, key, value)?),
                "boundary_modes" => cfg.boundary_modes = Some(scalar(line, key, value)?),
                "compress_tol" => cfg.compress_tol = Some(scalar(line, key, value)?),
                "initial" => cfg.initial = Some(value.parse()?),
                "controlled" => cfg.controlled = Some(scalar(line, key, value)?),
                _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ExperimentConfig::parse(
            "# coupled study\nkind = spde_coupled\n\ndt_exponents = 1, 2,3,4  # four levels\nseed=7\nbeta = 0.5\ncontrolled = false\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, Some(StudyKind::SpdeCoupled));
        assert_eq!(cfg.dt_exponents, Some(vec![1, 2, 3, 4]));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.beta, Some(0.5));
        assert_eq!(cfg.controlled, Some(false));
        assert_eq!(cfg.level, None);
    }

    #[test]
    fn rejects_bad_lines() {
        for text in ["level 4", "level = four", "colour = blue", "kind = heat", "levels = 1,,2"] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = ExperimentConfig::from_file(Path::new("/nonexistent/missing.cfg")).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("missing.cfg"));
    }

    #[test]
    fn coupling_levels() {
        assert_eq!(Coupling::HEqDt.level(3), 3);
        assert_eq!(Coupling::HEqDtSquared.level(3), 6);
    }
}
