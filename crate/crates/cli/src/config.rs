//! Config resolution: defaults, then the file, then `--set`, then flags.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use beamalign::simkit::{ExperimentConfig, SchemeSpec};
use serde_json::Value;

use crate::args::ConfigArgs;

/// Recursively overlays `top` onto `base`; objects merge, everything else
/// replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("malformed override key '{path}'");
    }
    for key in &keys[..keys.len() - 1] {
        if !cur.get(*key).is_some_and(Value::is_object) {
            cur.as_object_mut()
                .ok_or_else(|| anyhow!("override '{path}' descends into a non-object"))?
                .insert(key.to_string(), Value::Object(Default::default()));
        }
        cur = cur.get_mut(*key).ok_or_else(|| anyhow!("override '{path}' descends into a non-object"))?;
    }
    cur.as_object_mut()
        .ok_or_else(|| anyhow!("override '{path}' descends into a non-object"))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_override(spec: &str) -> Result<(&str, Value)> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| anyhow!("override '{spec}' is not KEY=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim(), value))
}

fn read_config_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).with_context(|| format!("config file {} is not valid JSON", path.display()))?;
    if value.get("manifest").is_some() {
        value = value.get_mut("config").map(Value::take).ok_or_else(|| anyhow!("manifest has no config"))?;
    }
    Ok(value)
}

/// Builds and validates the experiment config. Every error here is a usage
/// or configuration error.
pub fn resolve(args: &ConfigArgs, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<ExperimentConfig> {
    let mut value = serde_json::to_value(ExperimentConfig::default())?;
    if let Some(path) = &args.config {
        merge(&mut value, read_config_file(path)?);
    }
    for spec in &args.set {
        let (key, v) = parse_override(spec)?;
        set_path(&mut value, key, v)?;
    }
    let mut cfg: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| anyhow!("config does not match the schema: {e}"))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(schemes) = &args.schemes {
        cfg.schemes = schemes.iter().map(|s| s.parse::<SchemeSpec>()).collect::<beamalign::Result<_>>()?;
    }
    if let Some(b) = &args.budget_db {
        cfg.budget_grid_db = b.clone();
    }
    edit(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
