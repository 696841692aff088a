//! Scorer construction and `--param scorer.key=value` overrides, applied
//! through each parameter struct's serde form so unknown keys are caught.

use anyhow::{anyhow, bail, Result};
use ontolink_core::embed::{
    SnoreParams, SnoreScorer, SpectralParams, SpectralScorer, TransEParams, TransEScorer,
};
use ontolink_core::graphcore::{CoinFlipScorer, ProximityIndex, ProximityScorer, Scorer};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const SCORERS: &[&str] = &[
    "snore", "adamic", "jaccard", "pref", "spectral", "transe", "random",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub scorer: String,
    pub key: String,
    pub value: Value,
}

pub fn parse_override(s: &str) -> Result<Override, String> {
    let (path, raw) = s
        .split_once('=')
        .ok_or_else(|| format!("expected scorer.key=value, got '{s}'"))?;
    let (scorer, key) = path
        .split_once('.')
        .ok_or_else(|| format!("expected scorer.key=value, got '{s}'"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(Override {
        scorer: scorer.to_string(),
        key: key.to_string(),
        value,
    })
}

/// Defaults for `scorer` with the matching overrides applied.
pub fn with_overrides<T: Serialize + DeserializeOwned>(
    base: T,
    scorer: &str,
    overrides: &[Override],
) -> Result<T> {
    let mut value = serde_json::to_value(&base)?;
    let map = value
        .as_object_mut()
        .expect("parameter structs serialize to objects");
    for o in overrides.iter().filter(|o| o.scorer == scorer) {
        match map.get_mut(&o.key) {
            Some(slot) => *slot = o.value.clone(),
            None => {
                let known: Vec<&String> = map.keys().collect();
                bail!("unknown parameter {scorer}.{} (known: {known:?})", o.key);
            }
        }
    }
    serde_json::from_value(value).map_err(|e| anyhow!("bad value for a {scorer} parameter: {e}"))
}

pub fn check_overrides(overrides: &[Override], allowed: &[&str]) -> Result<()> {
    for o in overrides {
        if !allowed.contains(&o.scorer.as_str()) {
            bail!("parameter {}.{} names a scorer not in use", o.scorer, o.key);
        }
    }
    Ok(())
}

pub fn snore_params(overrides: &[Override], threads: Option<usize>) -> Result<SnoreParams> {
    let mut p = with_overrides(SnoreParams::default(), "snore", overrides)?;
    p.threads = threads;
    Ok(p)
}

/// Splits and validates a comma-separated scorer list.
pub fn scorer_names(list: &str) -> Result<Vec<String>> {
    let names: Vec<String> = list
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        bail!("empty scorer list");
    }
    for n in &names {
        if !SCORERS.contains(&n.as_str()) {
            bail!("unknown scorer '{n}' (known: {})", SCORERS.join(", "));
        }
    }
    Ok(names)
}

pub fn build_scorers(
    names: &[String],
    overrides: &[Override],
    threads: Option<usize>,
) -> Result<Vec<Box<dyn Scorer>>> {
    let names_str: Vec<&str> = names.iter().map(String::as_str).collect();
    check_overrides(overrides, &names_str)?;
    names
        .iter()
        .map(|n| -> Result<Box<dyn Scorer>> {
            Ok(match n.as_str() {
                "snore" => Box::new(SnoreScorer::new(snore_params(overrides, threads)?)),
                "adamic" => Box::new(ProximityScorer::new(ProximityIndex::AdamicAdar)),
                "jaccard" => Box::new(ProximityScorer::new(ProximityIndex::Jaccard)),
                "pref" => Box::new(ProximityScorer::new(ProximityIndex::Preferential)),
                "spectral" => Box::new(SpectralScorer::new(with_overrides(
                    SpectralParams::default(),
                    "spectral",
                    overrides,
                )?)),
                "transe" => Box::new(TransEScorer::new(with_overrides(
                    TransEParams::default(),
                    "transe",
                    overrides,
                )?)),
                "random" => Box::new(CoinFlipScorer::default()),
                other => bail!("unknown scorer '{other}'"),
            })
        })
        .collect()
}
