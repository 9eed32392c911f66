//! `key=value` config files. Entries become `--key=value` flags placed
//! right after the subcommand, ahead of the user's own flags, so anything
//! given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};

/// Global options that take a value and may appear before the subcommand.
const GLOBAL_VALUED: &[&str] = &["--iccs-ranks"];

pub fn parse_config(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", i + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}

/// Removes `--config` from `args` and returns the remaining args plus the
/// config path, if one was given.
pub fn take_config_flag(args: Vec<OsString>) -> anyhow::Result<(Vec<OsString>, Option<OsString>)> {
    let mut out = Vec::with_capacity(args.len());
    let mut path = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--" {
            out.push(arg);
            out.extend(iter);
            break;
        }
        if text == "--config" {
            match iter.next() {
                Some(p) => path = Some(p),
                None => bail!("--config needs a file path"),
            }
        } else if let Some(p) = text.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            out.push(arg);
        }
    }
    Ok((out, path))
}

/// Inserts config entries after the subcommand name. `args[0]` is the
/// program name.
pub fn splice_config(args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let mut i = 1;
    while i < args.len() {
        let text = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&text.as_ref()) {
            i += 2;
        } else if text.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    if i >= args.len() {
        return args;
    }
    let mut out: Vec<OsString> = args[..=i].to_vec();
    out.extend(
        entries
            .iter()
            .map(|(k, v)| OsString::from(format!("--{k}={v}"))),
    );
    out.extend_from_slice(&args[i + 1..]);
    out
}
