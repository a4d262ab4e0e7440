//! Flat `key = value` training configuration.
//!
//! Blank lines and lines starting with `#` are ignored. `rows`, `cols`,
//! `depth` and `batch_size` are required; everything else has a default.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gan::{GradientMode, TrainConfig};

pub const KEYS: [&str; 11] = [
    "rows",
    "cols",
    "depth",
    "batch_size",
    "lr",
    "iterations",
    "gradient_mode",
    "seed_circuit",
    "seed_disc",
    "seed_sampling",
    "metric_every",
];

const REQUIRED: [&str; 4] = ["rows", "cols", "depth", "batch_size"];

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| config_err(key, format!("cannot parse {raw:?}: {e}")))
}

pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(line, format!("line {} is not `key = value`", n + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        if entries.insert(key, value).is_some() {
            return Err(config_err(key, "given more than once"));
        }
    }
    for key in REQUIRED {
        if !entries.contains_key(key) {
            return Err(config_err(key, "required key is missing"));
        }
    }

    let get = |k: &str| entries[k];
    let mut cfg = TrainConfig::new(
        parse_value("rows", get("rows"))?,
        parse_value("cols", get("cols"))?,
        parse_value("depth", get("depth"))?,
        parse_value("batch_size", get("batch_size"))?,
    );
    for (&key, &raw) in &entries {
        match key {
            "lr" => cfg.lr = parse_value(key, raw)?,
            "iterations" => cfg.iterations = parse_value(key, raw)?,
            "gradient_mode" => cfg.gradient_mode = parse_value::<GradientMode>(key, raw)?,
            "seed_circuit" => cfg.seed_circuit = parse_value(key, raw)?,
            "seed_disc" => cfg.seed_disc = parse_value(key, raw)?,
            "seed_sampling" => cfg.seed_sampling = parse_value(key, raw)?,
            "metric_every" => cfg.metric_every = parse_value(key, raw)?,
            _ => {}
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Every resolved setting, defaults included, in the same format
/// [`parse_config`] reads.
pub fn render_config(cfg: &TrainConfig) -> String {
    format!(
        "rows = {}\ncols = {}\ndepth = {}\nbatch_size = {}\nlr = {:?}\niterations = {}\n\
         gradient_mode = {}\nseed_circuit = {}\nseed_disc = {}\nseed_sampling = {}\n\
         metric_every = {}\n",
        cfg.rows,
        cfg.cols,
        cfg.depth,
        cfg.batch_size,
        cfg.lr,
        cfg.iterations,
        cfg.gradient_mode,
        cfg.seed_circuit,
        cfg.seed_disc,
        cfg.seed_sampling,
        cfg.metric_every,
    )
}
