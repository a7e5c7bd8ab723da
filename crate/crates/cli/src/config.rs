//! `key = value` config files, expanded into long flags placed before the
//! command-line flags so that explicit flags win.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Flags for each line of a config file. `true`/`false` values become bare
/// switches (or nothing).
pub fn expand(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            bail!("{}:{}: empty key", path.display(), i + 1);
        }
        if key == "config" {
            bail!("{}:{}: config files cannot include other config files", path.display(), i + 1);
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

/// Rewrites `argv` so that flags from `--config FILE` come right after the
/// subcommand, ahead of the explicit flags.
pub fn splice(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let extra = expand(Path::new(&path))?;
    // binary name, then the first non-flag token is the subcommand
    let at = rest.iter().skip(1).position(|a| !a.starts_with('-')).map_or(rest.len(), |i| i + 2);
    let mut out: Vec<String> = rest[..at.min(rest.len())].to_vec();
    out.extend(extra);
    out.extend(rest[at.min(rest.len())..].iter().cloned());
    Ok(out)
}
