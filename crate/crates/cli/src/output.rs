//! Output directory handling and the run manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fe_workbench::io::{write_csv, write_json};

use crate::config::ScenarioConfig;
use crate::{registry, CliError, Result};

/// Collects the files a scenario writes into its output directory.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_owned(), files: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.files.push(name.to_owned());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.to_owned());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub febench: String,
    pub fe_workbench: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 of the resolved configuration (defaults filled in).
    pub config_sha256: String,
    pub versions: Versions,
    /// The only field that differs between identical runs.
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Resolves defaults and overrides, runs the scenario and writes the manifest.
///
/// `out` and `seed` take precedence over the values in `cfg`. Without either,
/// output goes to `febench-out/<scenario>` and the seed is 0.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>, seed: Option<u64>) -> Result<RunManifest> {
    let start = Instant::now();
    let entry = registry::find(&cfg.scenario)?;
    let prepared = (entry.prepare)(cfg.params.clone())?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("febench-out").join(entry.name));
    let resolved =
        ScenarioConfig { scenario: entry.name.to_owned(), seed: Some(seed), output_dir: None, params: Some(prepared.params) };
    let canonical = serde_json::to_vec(&resolved).map_err(|e| CliError::Config(e.to_string()))?;

    let mut output = Output::new(&dir)?;
    output.json(RESOLVED_CONFIG, &resolved)?;
    (prepared.run)(&mut output, seed)?;

    let mut outputs = Vec::with_capacity(output.files.len());
    for name in &output.files {
        let bytes = std::fs::read(dir.join(name))?;
        outputs.push(OutputFile { file: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    let manifest = RunManifest {
        scenario: entry.name.to_owned(),
        seed,
        config_sha256: sha256_hex(&canonical),
        versions: Versions { febench: env!("CARGO_PKG_VERSION").to_owned(), fe_workbench: fe_workbench::VERSION.to_owned() },
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
