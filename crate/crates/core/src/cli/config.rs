//! Flat `key=value` settings with command-line precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::CliError;
use crate::io::read_key_values;

/// Keys accept either `-` or `_` as separator; they are stored with `-`.
fn canonical(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Resolved settings for one command: defaults, then the config file, then
/// command-line values.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    known: Vec<&'static str>,
}

impl Settings {
    /// `known` lists every key the command understands; config files may
    /// also carry `ignored` keys (derived values in manifests).
    pub fn resolve(
        known: &[&'static str],
        ignored: &[&str],
        config: Option<&Path>,
        overrides: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut s = Settings {
            values: BTreeMap::new(),
            known: known.to_vec(),
        };
        if let Some(path) = config {
            let pairs = read_key_values(path).map_err(|e| CliError::Config(e.to_string()))?;
            for (k, v) in pairs {
                let key = canonical(&k);
                if ignored.iter().any(|i| canonical(i) == key) {
                    continue;
                }
                if !s.known.iter().any(|&n| n == key) {
                    return Err(CliError::Config(format!(
                        "{}: unknown key {k:?}",
                        path.display()
                    )));
                }
                s.values.insert(key, v);
            }
        }
        for (key, value) in overrides {
            debug_assert!(known.contains(&key), "override for undeclared key {key}");
            if let Some(v) = value {
                s.values.insert(key.to_string(), v);
            }
        }
        Ok(s)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("{key}={v}: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required setting --{key}")))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.path(key)
            .ok_or_else(|| CliError::Config(format!("missing required setting --{key}")))
    }

    /// Records a resolved value so it shows up in the manifest.
    pub fn set(&mut self, key: &'static str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// All resolved keys except `skip`, sorted, as `key=value` lines.
    pub fn manifest(&self, skip: &[&str]) -> String {
        self.values
            .iter()
            .filter(|(k, _)| !skip.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
