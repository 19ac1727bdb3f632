use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use pqharm_core::curves::CurveConfig;
use pqharm_core::immersion::DerivativeConfig;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Engine {
    pub version: &'static str,
    pub step_rel: f64,
    pub jet_step_rel: f64,
    pub curve_step_rel: f64,
    pub curve_jet_step_rel: f64,
    pub tolerance: Option<f64>,
    pub path: Option<String>,
}

impl Engine {
    pub fn new(tolerance: Option<f64>, path: Option<String>) -> Self {
        let d = DerivativeConfig::default();
        let c = CurveConfig::default();
        Self {
            version: env!("CARGO_PKG_VERSION"),
            step_rel: d.step_rel,
            jet_step_rel: d.jet_step_rel,
            curve_step_rel: c.step_rel,
            curve_jet_step_rel: c.jet_step_rel,
            tolerance,
            path,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: Value,
    pub points: Value,
    pub summary: Value,
    pub engine: Engine,
    pub generated_unix: u64,
}

impl Report {
    pub fn new(
        command: &'static str,
        config: impl Serialize,
        points: Value,
        summary: Value,
        engine: Engine,
    ) -> Self {
        let generated_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            points,
            summary,
            engine,
            generated_unix,
        }
    }

    /// Pretty JSON to `out`, or to standard output when `out` is `None`.
    pub fn emit(&self, out: Option<&Path>, headline: &str) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        match out {
            Some(path) => {
                std::fs::write(path, text)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                println!("{headline}");
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}
