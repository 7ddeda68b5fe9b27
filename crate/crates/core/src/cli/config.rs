//! JSON configuration: loading, `--set` overrides, seed override, digest.

use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sim::SimConfig;

/// Environment variable that replaces `sim.seed`.
pub const SEED_ENV: &str = "RELAYSIM_SEED";

/// Applies `key.path=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise. Missing objects along the path are created;
/// numeric segments index into arrays.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (k, seg) in segments.iter().enumerate() {
        let last = k + 1 == segments.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: `{seg}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("`{key}`: index {idx} out of range ({len} items)")))?
            }
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            _ => {
                return Err(Error::Config(format!("`{key}`: `{seg}` is below a non-object value")));
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    Ok(())
}

/// Accepts a bare configuration or a run manifest carrying one under
/// `config`.
fn unwrap_manifest(v: Value) -> Value {
    match v {
        Value::Object(mut map) if !map.contains_key("sim") && map.contains_key("config") => {
            map.remove("config").expect("checked")
        }
        other => other,
    }
}

fn fill_defaults(v: &mut Value) {
    let cell = v.pointer("/workspace/cell").cloned();
    if let (Some(cell), Some(Value::Object(channel))) = (cell, v.get_mut("channel")) {
        channel.entry("eps_mf").or_insert(cell);
    }
}

/// Builds and validates a configuration from a JSON document.
pub fn config_from_value(
    doc: Value,
    overrides: &[String],
    seed_override: Option<&str>,
) -> Result<SimConfig> {
    let mut v = unwrap_manifest(doc);
    if !v.is_object() {
        return Err(Error::Config("configuration must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    if let Some(raw) = seed_override {
        let seed: u64 = raw
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} = `{raw}` is not an unsigned integer")))?;
        apply_override(&mut v, &format!("sim.seed={seed}"))?;
    }
    fill_defaults(&mut v);
    let cfg: SimConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String], seed_override: Option<&str>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{} is not valid JSON: {e}", path.display())))?;
    config_from_value(doc, overrides, seed_override)
}

/// Canonical JSON of the effective configuration (sorted keys).
pub fn canonical_json(cfg: &SimConfig) -> Result<String> {
    Ok(serde_json::to_string(&serde_json::to_value(cfg)?)?)
}

/// Hex SHA-256 of [`canonical_json`].
pub fn config_digest(cfg: &SimConfig) -> Result<String> {
    let hash = Sha256::digest(canonical_json(cfg)?.as_bytes());
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}
