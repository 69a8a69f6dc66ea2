use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, StudyKind};
use super::fit_order;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "level,h,dt,error,secondary_error,stderr,n_paths";

/// One study point. For Riccati studies `error` is `‖ΔP(0)‖` and
/// `secondary_error` is `‖B_bᵀΔP(0)‖`; for the coupled study they are the
/// controlled and uncontrolled RMS errors, with `stderr` belonging to
/// `error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub level: u32,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
    pub secondary_error: f64,
    pub stderr: Option<f64>,
    pub secondary_stderr: Option<f64>,
    pub n_paths: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub kind: StudyKind,
    pub rows: Vec<ReportRow>,
    /// Fitted order of `error` against the study's scale (`h` or `Δt`).
    pub order: Option<f64>,
    pub secondary_order: Option<f64>,
    pub runtime_seconds: f64,
    pub config: ExperimentConfig,
}

fn opt(v: Option<String>) -> String {
    v.unwrap_or_default()
}

impl ConvergenceReport {
    pub fn new(kind: StudyKind, rows: Vec<ReportRow>, runtime_seconds: f64, config: ExperimentConfig) -> Self {
        let mut report = Self { kind, rows, order: None, secondary_order: None, runtime_seconds, config };
        if let Ok((a, b)) = report.fit_orders(report.rows.len()) {
            report.order = Some(a);
            report.secondary_order = Some(b);
        }
        report
    }

    /// `h` for the spatial Riccati study, `Δt` otherwise.
    pub fn scale(&self, row: &ReportRow) -> f64 {
        match self.kind {
            StudyKind::RiccatiSpatial => row.h,
            _ => row.dt,
        }
    }

    /// Orders of both error families fitted over the `last` finest rows.
    pub fn fit_orders(&self, last: usize) -> Result<(f64, f64)> {
        let mut rows: Vec<&ReportRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| self.scale(b).total_cmp(&self.scale(a)));
        let tail = &rows[rows.len().saturating_sub(last)..];
        let fit = |pick: fn(&ReportRow) -> f64| {
            fit_order(&tail.iter().map(|r| (self.scale(r), pick(r))).collect::<Vec<_>>())
        };
        Ok((fit(|r| r.error)?, fit(|r| r.secondary_error)?))
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                r.level,
                r.h,
                r.dt,
                r.error,
                r.secondary_error,
                opt(r.stderr.map(|v| format!("{v:.17e}"))),
                opt(r.n_paths.map(|n| n.to_string())),
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.into()))
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        Ok(())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let se = r.stderr.map(|v| format!(" ± {v:.2e}")).unwrap_or_default();
                format!(
                    "level {:>2}  h {:.4e}  dt {:.4e}  error {:.6e}{se}  secondary {:.6e}",
                    r.level, r.h, r.dt, r.error, r.secondary_error
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: u32, dt: f64, error: f64) -> ReportRow {
        ReportRow {
            level,
            h: 0.5f64.powi(level as i32),
            dt,
            error,
            secondary_error: 2.0 * error,
            stderr: None,
            secondary_stderr: None,
            n_paths: None,
        }
    }

    #[test]
    fn orders_use_the_study_scale() {
        let rows = vec![row(4, 0.25, 1.0), row(4, 0.125, 0.25), row(4, 0.0625, 0.0625)];
        let r = ConvergenceReport::new(StudyKind::RiccatiTemporal, rows, 0.0, ExperimentConfig::default());
        assert!((r.order.unwrap() - 2.0).abs() < 1e-12);
        assert!((r.secondary_order.unwrap() - 2.0).abs() < 1e-12);

        let rows = vec![row(1, 0.1, 1.0), row(2, 0.1, 0.5), row(3, 0.1, 0.1)];
        let r = ConvergenceReport::new(StudyKind::RiccatiSpatial, rows, 0.0, ExperimentConfig::default());
        let (last_two, _) = r.fit_orders(2).unwrap();
        assert!((last_two - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn single_point_has_no_order() {
        let r = ConvergenceReport::new(StudyKind::RiccatiTemporal, vec![row(4, 0.25, 1.0)], 0.0, ExperimentConfig::default());
        assert_eq!(r.order, None);
        assert!(r.to_json().unwrap().contains("\"order\": null"));
    }

    #[test]
    fn csv_layout() {
        let mut a = row(2, 0.25, 1.5);
        a.stderr = Some(0.1);
        a.n_paths = Some(20);
        let r = ConvergenceReport::new(StudyKind::SpdeCoupled, vec![a, row(3, 0.125, 0.5)], 1.0, ExperimentConfig::default());
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "2,2.50000000000000000e-1,2.50000000000000000e-1,1.50000000000000000e0,3.00000000000000000e0,1.00000000000000006e-1,20"
        );
        assert!(lines[2].ends_with(",,"));
    }
}
