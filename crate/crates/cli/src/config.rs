//! `key=value` config files. Keys are long flag names of the subcommand
//! being run; values are spliced in ahead of the real flags so that the
//! command line wins.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::CliError;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Position of the subcommand name and the `--config` value, if any.
fn scan(argv: &[OsString]) -> (Option<usize>, Option<OsString>) {
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            config = argv.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.into());
        } else if !a.starts_with('-') {
            return (Some(i), config.or_else(|| find_config(&argv[i + 1..])));
        }
        i += 1;
    }
    (None, config)
}

fn find_config(rest: &[OsString]) -> Option<OsString> {
    let mut it = rest.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

pub fn expand(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, CliError> {
    let (sub_pos, config) = scan(&argv);
    let (Some(pos), Some(config)) = (sub_pos, config) else {
        return Ok(argv);
    };
    let path = Path::new(&config);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let name = argv[pos].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&name) else {
        return Ok(argv);
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse_config(&text)? {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            log::debug!("config key {key} does not apply to {name}");
            continue;
        };
        if let Some(env) = arg.get_env() {
            if std::env::var_os(env).is_some() {
                continue;
            }
        }
        match arg.get_action() {
            ArgAction::SetTrue => {
                if matches!(value.as_str(), "true" | "1" | "yes") {
                    injected.push(format!("--{key}").into());
                }
            }
            _ => {
                injected.push(format!("--{key}").into());
                injected.push(value.into());
            }
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
