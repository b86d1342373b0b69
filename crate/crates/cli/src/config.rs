//! `--config` files: one `key = value` per line, `#` starts a comment.
//!
//! Each key is the long name of a flag of the chosen subcommand
//! (`restarts = 40` is `--restarts 40`; underscores may stand for dashes).
//! File values are injected ahead of the command-line flags, and since
//! every flag overrides itself, flags given on the command line win.

use std::path::{Path, PathBuf};

use crate::CliError;

/// Parse a config file into `--key value` argument pairs.
pub fn parse_config(path: &Path, text: &str) -> Result<Vec<String>, CliError> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(err(format!("invalid key `{key}`")));
        }
        if key == "config" {
            return Err(err("config files cannot include other config files".into()));
        }
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        args.push(format!("--{key}"));
        args.push(value.to_string());
    }
    Ok(args)
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter().skip(2);
    while let Some(a) = it.next() {
        if a == "--" {
            return None;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Expand `--config FILE` into explicit flags placed right after the
/// subcommand name, ahead of every command-line flag.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>, CliError> {
    if args.len() < 2 || args[1].starts_with('-') {
        return Ok(args);
    }
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let injected = parse_config(&path, &text)?;
    let mut out = Vec::with_capacity(args.len() + injected.len());
    out.extend_from_slice(&args[..2]);
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
