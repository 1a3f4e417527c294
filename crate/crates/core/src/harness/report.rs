use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::Stat;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub schema_version: u32,
    pub experiment: String,
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    /// Column names of `rows`; one row per replica (or per level for the decay curves).
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub aggregates: BTreeMap<String, Stat>,
    /// Further named quantities (estimates, bounds, calibration inputs).
    pub values: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
}

impl SummaryReport {
    pub fn new(experiment: &str, cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            provenance: Provenance { config_hash: cfg.hash(), seed: cfg.seed, version: env!("CARGO_PKG_VERSION").into() },
            config: cfg.clone(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            aggregates: BTreeMap::new(),
            values: BTreeMap::new(),
            assertions: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => self.rows.iter().map(|r| r[i]).collect(),
            None => Vec::new(),
        }
    }

    /// Recompute the aggregate of a column from the rows.
    pub fn aggregate(&mut self, name: &str) -> Stat {
        let s = Stat::of(&self.column(name));
        self.aggregates.insert(name.into(), s);
        s
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn rows_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Writes `<experiment>.json` and `<experiment>.csv`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.experiment));
        let csv = dir.join(format!("{}.csv", self.experiment));
        std::fs::write(&json, self.to_json())?;
        std::fs::write(&csv, self.rows_csv())?;
        Ok(vec![json, csv])
    }
}
