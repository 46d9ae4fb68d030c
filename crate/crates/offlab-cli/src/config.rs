//! Plain key=value configuration files.
//!
//! Keys mirror the long flag names (`sr-true = 0.4`). Flags always win over
//! file values; the fully resolved parameter set is echoed in every output.

use std::collections::BTreeMap;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "sr-true",
    "theta",
    "f",
    "t-years",
    "days-per-year",
    "sr-correction",
    "seed",
    "n-paths",
    "n-buckets",
    "daily-vol",
    "mode",
    "scheme",
    "policy",
    "max-attempts",
    "sr",
    "confidence",
    "sides",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    pub path: Option<String>,
}

impl ConfigFile {
    pub fn load(path: Option<&str>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config file `{path}`: {e}")))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "config file `{path}` line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::validation(format!(
                    "config file `{path}` line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile {
            values,
            path: Some(path.to_string()),
        })
    }

    fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::validation(format!(
                    "config key `{key}`: cannot parse `{raw}` as {}",
                    std::any::type_name::<T>()
                ))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get_parsed(key)
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get_parsed(key)
    }

    pub fn u32(&self, key: &str) -> Result<Option<u32>, CliError> {
        self.get_parsed(key)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get_parsed(key)
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get_parsed(key)
    }

    pub fn string(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}
