use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentConfig, Scenario, ScenarioOutcome};
use crate::chain::ChainSchedule;
use crate::error::{Error, Result};
use crate::oracle::OracleReport;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub scenario: Scenario,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub schedules: &'a [ChainSchedule<f64>],
    pub oracle: &'a [OracleReport],
    pub verdicts: &'a serde_json::Value,
    pub passed: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `trace.csv`, `manifest.json` and `report.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &ScenarioOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let csv = fs::File::create(dir.join("trace.csv")).map_err(|e| Error::Io(e.to_string()))?;
    outcome.trace.write_csv(std::io::BufWriter::new(csv))?;
    let manifest = Manifest {
        scenario: outcome.scenario,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        schedules: &outcome.schedules,
        oracle: &outcome.oracle,
        verdicts: &outcome.verdicts,
        passed: outcome.passed,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    write_json(&dir.join("report.json"), &outcome.report)
}
