//! The JSON run report. `schema/report-v1.json` describes it.

use std::collections::BTreeMap;
use std::path::Path;

use gkdr::evaluation::BenchmarkResult;
use gkdr::model_selection::CvReport;
use serde::Serialize;
use serde_json::Value;

use crate::error::{config, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// The schema shipped with the binary.
pub const SCHEMA: &str = include_str!("../schema/report-v1.json");

#[derive(Debug, Clone, Default, Serialize)]
pub struct LowRankEcho {
    pub enabled: bool,
    pub tol: f64,
    pub max_rank: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DataEcho {
    /// `"synthetic"` or `"csv"`.
    pub source: String,
    pub path: Option<String>,
    pub synth: Option<String>,
    pub label_column: Option<String>,
    pub task: Option<String>,
    pub n: usize,
    pub m: usize,
    pub standardize: bool,
    /// Class names in one-hot column order.
    pub classes: Option<Vec<String>>,
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfigEcho {
    pub method: Option<String>,
    pub d: Option<usize>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub epsilon: Option<f64>,
    pub multiplier: Option<f64>,
    pub low_rank: Option<LowRankEcho>,
    pub schedule: Option<Vec<usize>>,
    pub block_size: Option<usize>,
    pub folds: Option<usize>,
    pub knn_k: Option<usize>,
    pub multipliers: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub data: Option<DataEcho>,
    pub replications: Option<usize>,
    pub threads: Option<usize>,
    /// The full argument list.
    pub argv: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkResult>,
    pub metrics: BTreeMap<String, Value>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config: ConfigEcho) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            seed,
            config,
            cv: None,
            benchmark: None,
            metrics: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: impl Serialize) -> CliResult<()> {
        let value = serde_json::to_value(value).map_err(|e| config(format!("metric {name}: {e}")))?;
        if !all_finite(&value) {
            return Err(CliError::Core(gkdr::Error::NonFinite("report metric")));
        }
        self.metrics.insert(name.to_owned(), value);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// `serde_json` turns non-finite floats into `null`, which is the only way a
/// non-finite number can show up here.
fn all_finite(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Array(items) => items.iter().all(all_finite),
        Value::Object(map) => map.values().all(all_finite),
        _ => true,
    }
}
