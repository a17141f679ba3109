//! `key = value` config files. Entries become command-line flags placed
//! before the real ones, so flags given on the command line win.

use std::path::Path;

use clap::{ArgAction, Command};

#[derive(Debug)]
pub struct ConfigError(pub String);

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected 'key = value', got '{line}'", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Turns config entries into flags for subcommand `sub`, rejecting keys the
/// subcommand does not know.
pub fn to_flags(cmd: &Command, sub: &str, entries: &[(String, String)]) -> Result<Vec<String>, ConfigError> {
    let Some(sc) = cmd.find_subcommand(sub) else {
        return Err(ConfigError(format!("unknown subcommand '{sub}'")));
    };
    let mut flags = Vec::new();
    for (k, v) in entries {
        let arg = sc
            .get_arguments()
            .find(|a| a.get_long() == Some(k.as_str()) && k != "config")
            .ok_or_else(|| ConfigError(format!("unknown key '{k}' for '{sub}'")))?;
        match arg.get_action() {
            ArgAction::SetTrue => match v.as_str() {
                "true" | "1" | "yes" => flags.push(format!("--{k}")),
                "false" | "0" | "no" => {}
                _ => return Err(ConfigError(format!("key '{k}': expected true or false, got '{v}'"))),
            },
            _ => flags.push(format!("--{k}={v}")),
        }
    }
    Ok(flags)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config '{}': {e}", path.display())))?;
    parse(&text)
}

/// Splits `--config PATH` / `--config=PATH` out of the raw arguments.
pub fn extract_path(args: &mut Vec<String>) -> Result<Option<String>, ConfigError> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if let Some(p) = args[i].strip_prefix("--config=") {
            found = Some(p.to_string());
            args.remove(i);
        } else if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(ConfigError("key 'config': missing path".into()));
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}
