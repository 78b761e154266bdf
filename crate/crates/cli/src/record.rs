use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};

#[derive(Clone, Debug, Serialize)]
pub struct Quantity {
    pub quantity: String,
    pub theta: Option<f64>,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRecord {
    pub experiment: String,
    pub version: String,
    pub seed: Option<u64>,
    pub inputs: Value,
    pub values: Vec<Quantity>,
    pub details: Value,
    /// Broken numerical invariants; non-empty means exit code 3.
    pub violations: Vec<String>,
    pub wall_time_s: f64,
}

/// Collects tagged numbers and invariant failures while an experiment runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub values: Vec<Quantity>,
    pub violations: Vec<String>,
}

impl Recorder {
    pub fn push(
        &mut self,
        quantity: impl Into<String>,
        theta: Option<f64>,
        value: f64,
        tolerance: f64,
    ) {
        self.values.push(Quantity {
            quantity: quantity.into(),
            theta,
            value,
            tolerance,
        });
    }

    /// Records a violation unless `ok`.
    pub fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(message());
        }
    }
}

impl ReportRecord {
    pub fn new(config: &ExperimentConfig, rec: Recorder, details: Value, wall_time_s: f64) -> Self {
        ReportRecord {
            experiment: config.experiment.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            inputs: serde_json::to_value(&config.parameters).unwrap_or(Value::Null),
            values: rec.values,
            details,
            violations: rec.violations,
            wall_time_s,
        }
    }

    pub fn render(&self, format: Format) -> anyhow::Result<Vec<u8>> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_vec_pretty(self)?;
                s.push(b'\n');
                Ok(s)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["experiment", "quantity", "theta", "value", "tolerance"])?;
                for q in &self.values {
                    w.write_record([
                        self.experiment.clone(),
                        q.quantity.clone(),
                        q.theta.map(|t| t.to_string()).unwrap_or_default(),
                        q.value.to_string(),
                        q.tolerance.to_string(),
                    ])?;
                }
                Ok(w.into_inner()?)
            }
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)?;
    Ok(())
}
