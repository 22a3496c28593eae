//! `--config` handling: key=value defaults merged under explicit flags.

use std::collections::HashSet;
use std::fs;

use clap::CommandFactory;

use crate::{usage, Cli, Failure};

/// Keys a config file may never set.
const RESERVED: [&str; 3] = ["config", "out", "help"];

fn long_name(token: &str) -> Option<&str> {
    let rest = token.strip_prefix("--")?;
    Some(rest.split_once('=').map_or(rest, |(k, _)| k))
}

/// Value of `--config` in `argv`, if any.
fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(tok) = it.next() {
        if tok == "--" {
            break;
        }
        if tok == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = tok.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// `(key, value, strict)` entries. Bare `key=value` lines are strict: an
/// unknown key is an error. `# key=value` header lines from toolkit files
/// are lenient. Reading stops at the first other line (a column line).
fn parse_entries(text: &str) -> Vec<(String, String, bool)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (body, strict) = match line.strip_prefix('#') {
            Some(rest) => (rest.trim_start(), false),
            None => (line.trim(), true),
        };
        match body.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                let k = if strict { k } else { k.strip_prefix("predictor.").unwrap_or(k) };
                out.push((k.to_string(), v.trim().to_string(), strict));
            }
            None if strict => break,
            None => {}
        }
    }
    out
}

/// Appends `--key=value` for every config entry whose flag exists for the
/// chosen subcommand and was not given explicitly.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Data(anyhow::anyhow!("config file {path}: {e}")))?;
    let root = Cli::command();
    let sub = argv
        .iter()
        .skip(1)
        .find_map(|t| root.find_subcommand(t))
        .ok_or_else(|| usage("--config needs a subcommand"))?;
    let known: HashSet<&str> = root
        .get_arguments()
        .chain(sub.get_arguments())
        .filter_map(|a| a.get_long())
        .filter(|l| !RESERVED.contains(l))
        .collect();
    let explicit: HashSet<&str> = argv.iter().filter_map(|t| long_name(t)).collect();
    let mut extra = Vec::new();
    let mut seen = HashSet::new();
    for (key, value, strict) in parse_entries(&text) {
        if !known.contains(key.as_str()) {
            if strict {
                return Err(usage(format!("config file {path}: unknown key '{key}' for '{}'", sub.get_name())));
            }
            continue;
        }
        if explicit.contains(key.as_str()) || !seen.insert(key.clone()) {
            continue;
        }
        extra.push(format!("--{key}={value}"));
    }
    let mut argv = argv;
    argv.extend(extra);
    Ok(argv)
}
