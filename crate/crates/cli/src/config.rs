//! Flat key=value run configuration.
//!
//! One `key=value` per line; blank lines and `#` comments are skipped.
//! Values never span lines. Command-line flags override file entries, and
//! `train` writes the resolved settings back out in this same format so a
//! run can be replayed from its own artifacts.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key any subcommand understands. Parsing validates against the
/// union so a shared config file can serve several subcommands, while
/// typos still fail fast.
pub const KNOWN_KEYS: [&str; 23] = [
    "manifest",
    "data_dir",
    "out",
    "checkpoint",
    "input",
    "scale",
    "se",
    "sp",
    "seed",
    "segment_seconds",
    "window_length",
    "step",
    "dft_length",
    "filter_count",
    "kept_coefficients",
    "freq_low",
    "freq_high",
    "learning_rate",
    "lambda",
    "keep_prob",
    "batch_size",
    "max_epochs",
    "patience",
];

/// Parses config text into ordered pairs. Duplicate keys are rejected;
/// key names are validated against [`KNOWN_KEYS`].
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key=value, got {line:?}", i + 1));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("line {}: unknown key {key:?}", i + 1));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(format!("line {}: duplicate key {key:?}", i + 1));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Resolved config file contents, or empty when no file was given.
#[derive(Debug, Default)]
pub struct ConfigMap {
    values: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigMap::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let pairs = parse_config(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(ConfigMap { values: pairs.into_iter().collect() })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::Usage(format!("config key {key}: bad value {raw:?}: {e}"))
            }),
        }
    }
}

/// Flag beats config beats nothing.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    config: &ConfigMap,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get(key),
    }
}

/// Like [`resolve`] but the setting is mandatory.
pub fn require<T: FromStr>(
    flag: Option<T>,
    config: &ConfigMap,
    key: &str,
) -> Result<T, CliError>
where
    T::Err: Display,
{
    resolve(flag, config, key)?
        .ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))
}
