use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// |measured − expected| ≤ tolerance.
    Within,
    /// measured ≤ expected + tolerance.
    AtMost,
    /// measured ≥ expected − tolerance.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, relation: Relation, expected: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Within => (measured - expected).abs() <= tolerance,
            Relation::AtMost => measured <= expected + tolerance,
            Relation::AtLeast => measured >= expected - tolerance,
        };
        Check {
            name: name.into(),
            measured,
            relation,
            expected,
            tolerance,
            pass,
        }
    }

    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Relation::Within, expected, tolerance)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, limit, 0.0)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, floor: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, floor, 0.0)
    }

    /// Boolean outcome recorded as 1/0 against 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Within, 1.0, 0.0)
    }

    pub fn count_zero(name: impl Into<String>, count: usize) -> Self {
        Self::new(name, count as f64, Relation::AtMost, 0.0, 0.0)
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub result: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, result: serde_json::Value, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        RunReport {
            version: crate::VERSION.to_string(),
            config,
            result,
            checks,
            pass,
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let io = |e: std::io::Error| LabError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// Wall-clock sidecar, kept out of the report so reports stay byte-stable.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub parts: Vec<(String, f64)>,
}

pub fn timing_path(report: &Path) -> PathBuf {
    crate::config::sidecar(report, "timing.json")
}
