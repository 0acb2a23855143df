//! Run configuration: one JSON document per run.
//!
//! ```json
//! { "scenario": "fm-fig3", "seed": 7, "output_dir": "out", "params": { ... } }
//! ```
//!
//! `params` may be omitted to take the scenario defaults. When present it
//! must list every field of the scenario; unknown keys are rejected at any
//! level. Field names carry their unit (`f_mf_hz`, `thickness_m`).

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<Value>,
}

impl ScenarioConfig {
    /// Defaults for a named scenario.
    pub fn named(scenario: &str) -> Self {
        Self { scenario: scenario.to_owned(), seed: None, output_dir: None, params: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        deserialize_with_path(&mut serde_json::Deserializer::from_str(text), "")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Parses scenario parameters, reporting failures as `params.<path>: <why>`.
pub fn parse_params<T: DeserializeOwned>(value: Value) -> Result<T> {
    deserialize_with_path(value, "params")
}

fn deserialize_with_path<'de, T, D>(de: D, root: &str) -> Result<T>
where
    T: DeserializeOwned,
    D: serde::Deserializer<'de>,
    D::Error: std::fmt::Display,
{
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner().to_string();
        let mut path: Vec<String> = Vec::new();
        if !root.is_empty() {
            path.push(root.to_owned());
        }
        let located = e.path().to_string();
        if located != "." {
            path.push(located);
        }
        // Point missing fields at the field itself rather than its parent.
        if let Some(name) = inner.strip_prefix("missing field `").and_then(|s| s.split('`').next()) {
            path.push(name.to_owned());
        }
        let where_ = if path.is_empty() { "<root>".to_owned() } else { path.join(".") };
        CliError::Config(format!("{where_}: {inner}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        #[allow(dead_code)]
        f_mf_hz: f64,
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Outer {
        #[allow(dead_code)]
        sweep: Inner,
    }

    fn message(r: Result<impl std::fmt::Debug>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config() {
        let c = ScenarioConfig::from_json(r#"{"scenario": "tdo"}"#).unwrap();
        assert_eq!(c, ScenarioConfig::named("tdo"));
    }

    #[test]
    fn unknown_top_level_key() {
        let m = message(ScenarioConfig::from_json(r#"{"scenario": "tdo", "sead": 3}"#));
        assert!(m.contains("unknown field `sead`"), "{m}");
    }

    #[test]
    fn missing_field_reports_its_path() {
        let m = message(parse_params::<Outer>(serde_json::json!({"sweep": {}})));
        assert!(m.starts_with("params.sweep.f_mf_hz: missing field"), "{m}");
    }

    #[test]
    fn wrong_type_reports_its_path() {
        let m = message(parse_params::<Outer>(serde_json::json!({"sweep": {"f_mf_hz": "fast"}})));
        assert!(m.starts_with("params.sweep.f_mf_hz:"), "{m}");
    }

    #[test]
    fn nested_unknown_key() {
        let m = message(parse_params::<Outer>(serde_json::json!({"sweep": {"f_mf_hz": 1.0, "f_mf": 2.0}})));
        assert!(m.contains("unknown field `f_mf`"), "{m}");
    }
}
