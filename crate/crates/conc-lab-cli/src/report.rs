//! Run reports. The report JSON is a pure function of (config, seed): every
//! field is deterministic, ordered, and serialized with round-trip-stable
//! floats. Wall-clock metadata lives in a separate `.meta.json` so that
//! byte-comparing two reports is meaningful.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::errors::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub observed: serde_json::Value,
    pub detail: String,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        pass: bool,
        observed: serde_json::Value,
        detail: impl Into<String>,
    ) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            observed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub experiment: String,
    pub seed: u64,
    pub description: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    /// extra files written next to the report (CSV exports etc.)
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(cfg: &ExperimentConfig, description: impl Into<String>) -> Self {
        RunReport {
            name: cfg.name.clone(),
            experiment: cfg.experiment.kind().into(),
            seed: cfg.seed,
            description: description.into(),
            checks: Vec::new(),
            pass: true,
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "## {} ({})\n\n{}\n\n| check | result | detail |\n|---|---|---|\n",
            self.name, self.experiment, self.description
        );
        for c in &self.checks {
            out.push_str(&format!(
                "| {} | {} | {} |\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        out.push_str(&format!(
            "\noverall: **{}**\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    name: &'a str,
    started_unix_ms: u128,
    duration_ms: u128,
    threads: usize,
}

/// Writes `<out>/<name>.report.json` (+ `.md` when asked) and the volatile
/// `.meta.json`. Returns the report path.
pub fn write_report(
    cfg: &ExperimentConfig,
    report: &RunReport,
    started_unix_ms: u128,
    duration_ms: u128,
) -> CliResult<PathBuf> {
    let dir = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(dir)?;
    let report_path = dir.join(format!("{}.report.json", cfg.name));
    let json = serde_json::to_string_pretty(report).map_err(conc_lab::Error::from)?;
    std::fs::write(&report_path, json.as_bytes())?;
    if matches!(cfg.format, OutputFormat::Md) {
        std::fs::write(
            dir.join(format!("{}.report.md", cfg.name)),
            report.to_markdown().as_bytes(),
        )?;
    }
    let meta = Meta {
        name: &cfg.name,
        started_unix_ms,
        duration_ms,
        threads: rayon::current_num_threads(),
    };
    std::fs::write(
        dir.join(format!("{}.meta.json", cfg.name)),
        serde_json::to_string_pretty(&meta)
            .map_err(conc_lab::Error::from)?
            .as_bytes(),
    )?;
    Ok(report_path)
}

/// Formats a float for check details without locale surprises.
pub fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

pub fn json_f64s(vs: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(
        vs.iter()
            .map(|v| serde_json::json!(v))
            .collect(),
    )
}
