//! Experiment runner: configs in, reports and tables out.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod report;
pub mod table;

use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;
use sigmalab::geometry::GeometryError;
use sigmalab::lrcontrol::LrError;
use sigmalab::raydyn::RayError;
use sigmalab::spectral::SpectralError;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use report::{Check, RunReport};
pub use table::Table;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Control(#[from] LrError),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<(PathBuf, Table)>,
    pub timing: report::Timing,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }
}

/// Dispatch a (materialized) config. Check failures are carried in the report.
pub fn run(config: ExperimentConfig) -> Result<RunOutput, LabError> {
    let config = config.materialize()?;
    let start = Instant::now();
    let mut parts = Vec::new();
    let outcome = match &config {
        ExperimentConfig::Tgcc(c) => experiments::tgcc(c)?,
        ExperimentConfig::Spectra(c) => experiments::spectra(c)?,
        ExperimentConfig::CounterexampleSphere(c) => experiments::counterexample_sphere(c)?,
        ExperimentConfig::CounterexampleRevolution(c) => experiments::counterexample_revolution(c)?,
        ExperimentConfig::Kernel(c) => experiments::kernel(c)?,
        ExperimentConfig::Gramian(c) => experiments::gramian(c)?,
        ExperimentConfig::Control(c) => experiments::control(c)?,
        ExperimentConfig::AcceptAll(c) => {
            let mut checks = Vec::new();
            let mut criteria = Vec::new();
            for &id in &c.criteria {
                let t0 = Instant::now();
                let o = acceptance::run_criterion(id, c.seed)?;
                parts.push((format!("criterion_{id}"), t0.elapsed().as_secs_f64()));
                checks.extend(o.checks.iter().cloned().map(|k| k.prefixed(&format!("c{id}"))));
                criteria.push(json!({ "id": o.id, "title": o.title, "pass": o.pass, "result": o.result }));
            }
            experiments::Outcome {
                result: json!({ "criteria": criteria }),
                checks,
                tables: Vec::new(),
            }
        }
    };
    let report = RunReport::new(config, outcome.result, outcome.checks);
    Ok(RunOutput {
        report,
        tables: outcome.tables,
        timing: report::Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            parts,
        },
    })
}

/// Write every table, the report and the timing sidecar; returns the paths written.
pub fn emit_tables(out: &RunOutput) -> Result<Vec<PathBuf>, LabError> {
    let mut written = Vec::new();
    for (path, t) in &out.tables {
        t.write(path)?;
        written.push(path.clone());
    }
    let rp = out.report.config.report_path();
    report::write_json(&rp, &out.report)?;
    written.push(rp.clone());
    let tp = report::timing_path(&rp);
    report::write_json(&tp, &out.timing)?;
    written.push(tp);
    Ok(written)
}
