//! TOML settings and the run manifest written next to every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::CliError;

/// Keys accepted at the top level of a config file, besides one table per
/// subcommand.
const GLOBAL_KEYS: &[&str] = &["workers", "lenient"];

/// Settings from a `--config` file, scoped to one subcommand.
///
/// A key is looked up first in the subcommand's table (`[filter]`,
/// `[build-map]`, ...) and then at the top level.
#[derive(Debug, Default)]
pub struct Settings {
    global: toml::Table,
    section: toml::Table,
    name: String,
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &str, known: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                name: section.to_string(),
                ..Self::default()
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, section, known)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str, section: &str, known: &[&str]) -> Result<Self, String> {
        let mut global: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        let section_table = match global.remove(section) {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(format!("`{section}` must be a table")),
            None => toml::Table::new(),
        };
        for key in section_table.keys() {
            if !known.contains(&key.as_str()) && !GLOBAL_KEYS.contains(&key.as_str()) {
                return Err(format!("unknown key `{section}.{key}`"));
            }
        }
        for (key, value) in &global {
            let is_table = matches!(value, toml::Value::Table(_));
            if !(GLOBAL_KEYS.contains(&key.as_str()) || is_table && super::SUBCOMMANDS.contains(&key.as_str())) {
                return Err(format!("unknown top-level key `{key}`"));
            }
        }
        global.retain(|_, v| !matches!(v, toml::Value::Table(_)));
        Ok(Self {
            global,
            section: section_table,
            name: section.to_string(),
        })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        let Some(value) = self.section.get(key).or_else(|| self.global.get(key)) else {
            return Ok(None);
        };
        value
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e: toml::de::Error| {
                CliError::Validation(format!("config key `{}.{key}`: {}", self.name, e.message()))
            })
    }

    /// `flag`, else the config value, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    /// Like [`Settings::pick`] without a default.
    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// A boolean switch: set by the flag, or by the config when the flag is absent.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.get(key)?.unwrap_or(false))
    }

    /// A list flag; an empty list on the command line defers to the config.
    pub fn pick_list(&self, flag: Vec<String>, key: &str) -> Result<Vec<String>, CliError> {
        if !flag.is_empty() {
            return Ok(flag);
        }
        Ok(self.get(key)?.unwrap_or_default())
    }
}

/// Provenance record written as `<output>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective configuration after merging flags, config file and defaults.
    pub config: Value,
    /// Input path to `sha256:<hex>` of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, inputs: &[&Path]) -> Result<Self, CliError> {
        let mut fingerprints = BTreeMap::new();
        for path in inputs {
            fingerprints.insert(path.display().to_string(), fingerprint_file(path)?);
        }
        Ok(Self {
            command: command.to_string(),
            config,
            inputs: fingerprints,
            tool_version: super::VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_for(&self, output: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn fingerprint_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}
