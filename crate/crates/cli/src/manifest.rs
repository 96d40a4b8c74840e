use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::write_json;

pub const SCHEMA_VERSION: u32 = 1;

/// Written next to every run's outputs; `--config` accepts it back.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest<T> {
    pub schema_version: u32,
    pub command: String,
    pub config: T,
}

/// Load a config file: either a manifest for `command` or a bare config object.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::usage(format!("{}: {e}", path.display()));
    if value.get("schema_version").is_some() {
        let m: Manifest<serde_json::Value> = serde_json::from_value(value).map_err(bad)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!("unsupported schema_version {}", m.schema_version)));
        }
        if m.command != command {
            return Err(CliError::usage(format!("manifest is for '{}', not '{command}'", m.command)));
        }
        serde_json::from_value(m.config).map_err(bad)
    } else {
        serde_json::from_value(value).map_err(bad)
    }
}

pub fn write<T: Serialize>(dir: &Path, command: &str, config: &T) -> Result<(), CliError> {
    let m = Manifest { schema_version: SCHEMA_VERSION, command: command.to_string(), config };
    write_json(&dir.join("manifest.json"), &m)
}
