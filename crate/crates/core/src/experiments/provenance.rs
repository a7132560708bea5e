//! JSON sidecars describing how an output file was produced.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// SHA-256 of the compact JSON serialisation of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub csa: String,
    pub rustc: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            csa: env!("CARGO_PKG_VERSION").to_string(),
            rustc: env!("CSA_RUSTC_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Versions,
    pub config: Value,
    /// Output files, relative to the sidecar.
    pub outputs: Vec<String>,
    /// Study-specific records (selected tolerances, fitted exponents, ...).
    pub extra: Map<String, Value>,
}

impl Provenance {
    pub fn new<T: Serialize>(command: &str, config: &T, seed: u64) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_hash: config_hash(config)?,
            seed,
            versions: Versions::default(),
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
            extra: Map::new(),
        })
    }

    pub fn record<V: Serialize>(&mut self, key: &str, value: V) -> Result<()> {
        self.extra.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
