//! Run manifests written next to each command's primary artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use memcell::cell::CellConfig;
use serde::{Deserialize, Serialize};

use crate::config::{config_pairs, parse_config_str};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    /// Every configuration key with its resolved value.
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: &CellConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            seed: None,
            config: config_pairs(config)
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }

    /// Rebuilds the configuration from the snapshot.
    pub fn config(&self) -> Result<CellConfig, crate::ConfigError> {
        let text: String = self
            .config
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        parse_config_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            source: crate::ConfigError {
                line: Some(e.line()),
                message: format!("malformed manifest: {e}"),
            },
        })
    }
}

/// `<artifact>.manifest.json`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}
