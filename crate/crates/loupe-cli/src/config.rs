//! Run configuration: flat `key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use loupe_core::geometry::{parse_domain, parse_point, parse_set};
use loupe_core::{CompactSet, ComplexPoint, Domain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys naming output locations; they never enter the configuration hash.
pub const OUTPUT_KEYS: [&str; 5] = ["out", "csv", "svg", "config", "cache-dir"];

/// A command with its parameters, keyed by long flag name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = normalize(k);
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Merges a config file (if any) with flag values; flags win.
    pub fn build(command: &str, flags: BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut params = match flags.get("config") {
            Some(path) => {
                let text = std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Config(format!("cannot read config `{path}`: {e}")))?;
                parse_flat(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(c) = params.remove("command") {
            if c != command {
                return Err(CliError::Config(format!("config is for `{c}`, not `{command}`")));
            }
        }
        for (k, v) in flags {
            params.insert(normalize(&k), v);
        }
        Ok(RunConfig { command: command.to_string(), params })
    }

    /// Parameters that determine the result.
    pub fn hashed_params(&self) -> BTreeMap<String, String> {
        self.params.iter().filter(|(k, _)| !OUTPUT_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// SHA-256 over the command, the result-determining parameters and the library version.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update([0]);
        for (k, v) in self.hashed_params() {
            h.update(k.as_bytes());
            h.update([b'=']);
            h.update(v.as_bytes());
            h.update([0]);
        }
        h.update(crate::VERSION.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    /// The seed; every computing command needs one.
    pub fn seed(&self) -> Result<u64, CliError> {
        let s = self.get("seed").ok_or_else(|| CliError::Config("a seed is required (`--seed` or `seed = ...`)".into()))?;
        s.parse().map_err(|_| CliError::Config(format!("seed must be an unsigned integer, got `{s}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let s = self.require(key)?;
        s.parse().map_err(|_| CliError::Config(format!("`{key}` must be a number, got `{s}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        if self.get(key).is_some() {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("`{key}` must be an unsigned integer, got `{s}`"))),
            None => Ok(default),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.get(key) {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("`{key}` must be a comma-separated list of numbers, got `{s}`"))))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn set(&self, key: &str) -> Result<CompactSet, CliError> {
        parse_set(self.require(key)?).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    /// A `|`-separated list of set literals.
    pub fn sets(&self, key: &str) -> Result<Vec<CompactSet>, CliError> {
        self.require(key)?.split('|').map(|s| parse_set(s).map_err(|e| CliError::Config(format!("`{key}`: {e}")))).collect()
    }

    pub fn domain(&self, key: &str) -> Result<Domain, CliError> {
        parse_domain(self.require(key)?).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn point(&self, key: &str) -> Result<ComplexPoint, CliError> {
        parse_point(self.require(key)?).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn point_or(&self, key: &str, default: ComplexPoint) -> Result<ComplexPoint, CliError> {
        if self.get(key).is_some() {
            self.point(key)
        } else {
            Ok(default)
        }
    }

    pub fn finite_point(&self, key: &str) -> Result<loupe_core::C64, CliError> {
        self.point(key)?.finite().ok_or_else(|| CliError::Config(format!("`{key}` must be a finite point")))
    }
}
