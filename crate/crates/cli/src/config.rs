//! `--config` files: `key = value` lines naming long flags. A flag given on
//! the command line wins over the same key in the file; repeated keys are
//! all passed (for repeatable flags such as `param`).

use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() || key == "config" {
            bail!("config line {}: bad key '{key}'", i + 1);
        }
        out.push((key, value));
    }
    Ok(out)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter()
        .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Appends the file's settings to `args` as long flags. `true` becomes a
/// bare switch and `false` is dropped.
pub fn merge(args: &mut Vec<String>, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let settings = parse_config(&text)?;
    let explicit: Vec<String> = args.clone();
    for (key, value) in settings {
        if given(&explicit, &key) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value);
            }
        }
    }
    Ok(())
}
