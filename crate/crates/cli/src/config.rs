//! Resolved run configuration, config hashing, and manifests.
//!
//! Every run resolves a flat string key/value map from four layers:
//! built-in defaults, an optional TOML config file, `--set key=value`
//! overrides, and dedicated flags. The resolved map (plus the command
//! name) is hashed; the hash ties every output CSV to the manifest that
//! can reproduce it.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use acclim_core::error::{Error, Result};
use sha2::{Digest, Sha256};

/// Fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: &'static str,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &'static str, defaults: &[(&str, &str)]) -> Self {
        let values = defaults
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { command, values }
    }

    fn known(&self, key: &str) -> Result<()> {
        if !self.values.contains_key(key) && key != "seed" {
            return Err(Error::Config(format!(
                "unknown configuration key `{key}` for command `{}`",
                self.command
            )));
        }
        Ok(())
    }

    /// Overlay values from a TOML file. A `[config]` table takes
    /// precedence (manifests have one); otherwise top-level scalars are
    /// used. Unknown keys are rejected.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let value: toml::Value = text
            .parse()
            .map_err(|e| Error::Format(format!("{}: invalid TOML: {e}", path.display())))?;
        let table = match value.get("config") {
            Some(toml::Value::Table(t)) => t.clone(),
            Some(_) => {
                return Err(Error::Format(format!(
                    "{}: `config` must be a table",
                    path.display()
                )))
            }
            None => match value {
                toml::Value::Table(t) => t,
                _ => return Err(Error::Format("config root must be a table".into())),
            },
        };
        for (key, val) in table {
            // skip nested tables (e.g. a manifest's [run] section)
            if val.is_table() {
                continue;
            }
            let rendered = toml_scalar_to_string(&val).ok_or_else(|| {
                Error::Format(format!("config key `{key}` has a non-scalar value"))
            })?;
            self.known(&key)?;
            self.values.insert(key, rendered);
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_set(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects key=value, got `{spec}`"))
        })?;
        self.known(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Set a value from a dedicated flag.
    pub fn set<V: Display>(&mut self, key: &str, value: V) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// The mandatory master seed.
    pub fn seed(&self) -> Result<u64> {
        let raw = self.values.get("seed").ok_or_else(|| {
            Error::Config(
                "no master seed configured; pass --seed, --set seed=..., or a config file with a seed".into(),
            )
        })?;
        raw.parse::<u64>()
            .map_err(|e| Error::Config(format!("bad seed `{raw}`: {e}")))
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing configuration key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.get_str(key)?;
        raw.parse()
            .map_err(|e| Error::Config(format!("key `{key}`: bad number `{raw}`: {e}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let raw = self.get_str(key)?;
        raw.parse()
            .map_err(|e| Error::Config(format!("key `{key}`: bad count `{raw}`: {e}")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        let raw = self.get_str(key)?;
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Config(format!("key `{key}`: bad flag `{other}`"))),
        }
    }

    /// Parse a list of reals: comma-separated values, or an inclusive
    /// `start:end:step` range.
    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get_str(key)?;
        parse_f64_list(raw)
            .map_err(|e| Error::Config(format!("key `{key}`: {e}")))
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.get_str(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("key `{key}`: bad count `{s}`: {e}")))
            })
            .collect()
    }

    /// Hash of the command name and the resolved key/value map.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.command.as_bytes());
        hasher.update(b"\n");
        for (k, v) in &self.values {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(32);
        for b in &digest[..16] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Write `manifest.toml` into the output directory; re-running with
    /// `--config <manifest>` reproduces the run.
    pub fn write_manifest(&self, out_dir: &Path, wall_time_s: f64) -> Result<PathBuf> {
        let path = out_dir.join("manifest.toml");
        let mut text = String::new();
        text.push_str("[run]\n");
        text.push_str(&format!("command = \"{}\"\n", self.command));
        text.push_str(&format!(
            "version = \"{}\"\n",
            env!("CARGO_PKG_VERSION")
        ));
        text.push_str(&format!("config_hash = \"{}\"\n", self.hash()));
        text.push_str(&format!("wall_time_s = {wall_time_s:.3}\n"));
        text.push_str("\n[config]\n");
        for (k, v) in &self.values {
            text.push_str(&format!("{k} = \"{}\"\n", v.replace('\\', "\\\\").replace('"', "\\\"")));
        }
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn toml_scalar_to_string(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(format!("{f}")),
        toml::Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

fn parse_f64_list(raw: &str) -> std::result::Result<Vec<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err("empty list".into());
    }
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:end:step, got `{raw}`"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
        let end: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
        let step: f64 = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
        if !(step > 0.0) || end < start {
            return Err(format!("bad range `{raw}`"));
        }
        let n = ((end - start) / step).round() as usize;
        return Ok((0..=n)
            .map(|i| start + i as f64 * step)
            .filter(|v| *v <= end + 1e-9)
            .collect());
    }
    raw.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad value `{s}`: {e}")))
        .collect()
}
