use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one run; its `config` member can be fed back through `--config`.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: Map<String, Value>,
    pub inputs: BTreeMap<String, InputDigest>,
    pub outputs: Vec<String>,
    pub details: Value,
    pub wall_time_secs: f64,
}

pub struct Recorder {
    command: String,
    seed: u64,
    config: Map<String, Value>,
    inputs: BTreeMap<String, InputDigest>,
    started: Instant,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Recorder {
    pub fn new(command: &str, seed: u64, started: Instant) -> Self {
        Self { command: command.into(), seed, config: Map::new(), inputs: BTreeMap::new(), started }
    }

    /// Adds the fields of a flag group to the recorded configuration.
    pub fn config<T: Serialize>(&mut self, group: &T) -> Result<()> {
        if let Value::Object(m) = serde_json::to_value(group)? {
            for (k, v) in m {
                if !v.is_null() {
                    self.config.insert(k, v);
                }
            }
        }
        Ok(())
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let digest = InputDigest { path: path.display().to_string(), sha256: sha256_file(path)? };
        self.inputs.insert(role.into(), digest);
        Ok(())
    }

    pub fn finish(self, dir: &Path, outputs: Vec<String>, details: Value) -> Result<()> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs,
            details,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
