//! Versioned TOML run configuration with `key.path=value` overrides.

use std::path::Path;

use panoplan_core::eval::RansacConfig;
use panoplan_core::pipeline::PipelineConfig;
use panoplan_core::scene::{NoiseSpec, SyntheticHomeConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

pub const CONFIG_VERSION: i64 = 1;

/// Detection noise applied by `generate` after the noiseless home is built.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub sigma_vertex: f64,
    pub sigma_wdo_endpoint: f64,
    pub sigma_vanishing: f64,
    pub wdo_drop_prob: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn is_zero(&self) -> bool {
        self.sigma_vertex == 0.0 && self.sigma_wdo_endpoint == 0.0 && self.sigma_vanishing == 0.0 && self.wdo_drop_prob == 0.0
    }

    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            sigma_vertex: self.sigma_vertex,
            sigma_wdo_endpoint: self.sigma_wdo_endpoint,
            sigma_vanishing: self.sigma_vanishing,
            wdo_drop_prob: self.wdo_drop_prob,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub version: i64,
    pub generate: SyntheticHomeConfig,
    pub noise: NoiseConfig,
    pub pipeline: PipelineConfig,
    pub evaluate: RansacConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            generate: SyntheticHomeConfig::default(),
            noise: NoiseConfig::default(),
            pipeline: PipelineConfig::default(),
            evaluate: RansacConfig::default(),
        }
    }
}

impl Config {
    /// Reads `path` (defaults when absent), applies `overrides` in order and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let t: Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                match t.get("version") {
                    Some(Value::Integer(CONFIG_VERSION)) => {}
                    Some(v) => return Err(CliError::Config(format!("unsupported config version {v}"))),
                    None => return Err(CliError::Config(format!("{}: missing `version = {CONFIG_VERSION}`", p.display()))),
                }
                t
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Config = Value::Table(table.clone()).try_into().map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!("unsupported config version {}", cfg.version)));
        }
        // nested sections accept unknown keys, so check every given leaf
        // survives a round trip through the typed config
        let resolved = cfg.to_table();
        let mut leaves = Vec::new();
        leaf_paths(&table, "", &mut leaves);
        if let Some(bad) = leaves.iter().find(|p| lookup(&resolved, p).is_none()) {
            return Err(CliError::Config(format!("unknown config key `{bad}`")));
        }
        cfg.pipeline.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_table(&self) -> Table {
        Table::try_from(self).expect("config serializes to TOML")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical TOML rendering of the resolved config.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_toml().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    // TOML literal if it parses as one, otherwise a bare string
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let (last, path) = parts.split_last().unwrap();
    let mut cur = table;
    for p in path {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn leaf_paths(t: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(sub) => leaf_paths(sub, &path, out),
            _ => out.push(path),
        }
    }
}

fn lookup<'a>(t: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut v = t.get(parts.next()?)?;
    for p in parts {
        v = v.as_table()?.get(p)?;
    }
    Some(v)
}
