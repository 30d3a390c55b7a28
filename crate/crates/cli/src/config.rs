//! `key=value` config files, merged into argv as long flags.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::exit::{CliError, ExitKind};

/// Removes `--config <path>` from `argv` and returns the path, if present.
fn take_config(argv: &mut Vec<OsString>) -> Option<OsString> {
    let i = argv.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))?;
    let a = argv.remove(i);
    let s = a.to_string_lossy();
    if let Some(v) = s.strip_prefix("--config=") {
        return Some(v.into());
    }
    if i < argv.len() {
        Some(argv.remove(i))
    } else {
        Some(OsString::new())
    }
}

fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::new(
                ExitKind::Config,
                format!("{}:{}: expected key=value", path.display(), n + 1),
            )
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Appends the config file's settings to `argv` for every flag the user did
/// not pass explicitly.
pub fn expand(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = take_config(&mut argv) else {
        return Ok(argv);
    };
    if path.is_empty() {
        return Err(CliError::new(ExitKind::Usage, "--config needs a file argument"));
    }
    let path = Path::new(&path).to_path_buf();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::new(ExitKind::Io, format!("cannot read config {}: {e}", path.display())))?;
    let pairs = parse_pairs(&text, &path)?;

    let cmd = Cli::command();
    let sub = argv
        .iter()
        .skip(1)
        .find_map(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()));
    let given = |key: &str| {
        argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == format!("--{key}") || a.starts_with(&format!("--{key}="))
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in pairs {
        let arg = sub
            .and_then(|s| s.get_arguments().find(|a| a.get_long() == Some(key.as_str())))
            .or_else(|| cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())));
        let Some(arg) = arg else {
            return Err(CliError::new(
                ExitKind::Config,
                format!("{}: unknown key {key:?}", path.display()),
            ));
        };
        if key == "config" {
            return Err(CliError::new(ExitKind::Config, "config files cannot include other config files"));
        }
        if given(&key) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(CliError::new(
                        ExitKind::Config,
                        format!("{}: {key} expects true or false, got {value:?}", path.display()),
                    ))
                }
            }
        }
    }
    argv.extend(extra);
    Ok(argv)
}
