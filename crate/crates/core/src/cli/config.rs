//! Config files and run manifests.
//!
//! Both are flat TOML tables keyed by long flag names. A config file is
//! expanded into flags placed before the user's own, so flags given on the
//! command line take precedence. A manifest records every resolved flag of a
//! run, so `deepfactor <command> --config manifest.toml` replays it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, ArgMatches};

use super::args::COMMANDS;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: i64 = 1;

/// Keys that describe the file rather than flags.
const META_KEYS: [&str; 2] = ["command", "schema_version"];

/// Flags that do not affect outputs and are left out of manifests.
const UNRECORDED: [&str; 5] = ["out", "config", "threads", "log-level", "help"];

fn toml_to_flag(key: &str, value: &toml::Value) -> Result<Option<Vec<OsString>>> {
    let scalar = |v: &toml::Value| -> Result<String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(Error::InvalidArgument(format!("config key '{key}': unsupported value {other}"))),
        }
    };
    let text = match value {
        toml::Value::Boolean(true) => return Ok(Some(vec![format!("--{key}").into()])),
        toml::Value::Boolean(false) => return Ok(None),
        toml::Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
        other => scalar(other)?,
    };
    Ok(Some(vec![format!("--{key}={text}").into()]))
}

/// Reads a config file into flags, checking its `command` key if present.
pub fn config_flags(path: &Path, command: Option<&str>) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        path: path.display().to_string(),
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    if let (Some(toml::Value::String(expected)), Some(actual)) = (table.get("command"), command) {
        if expected != actual {
            return Err(Error::InvalidArgument(format!(
                "config {} is for '{expected}', not '{actual}'",
                path.display()
            )));
        }
    }
    let mut flags = Vec::new();
    for (key, value) in &table {
        if META_KEYS.contains(&key.as_str()) {
            continue;
        }
        if let Some(f) = toml_to_flag(key, value)? {
            flags.extend(f);
        }
    }
    Ok(flags)
}

fn global_takes_value(arg: &str) -> bool {
    matches!(arg, "--seed" | "--out" | "--config" | "--threads" | "--log-level")
}

/// Splices config-file flags into `argv` right after the subcommand.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    let mut command = None;
    let mut i = 1;
    while i < strs.len() {
        let a = strs[i].as_str();
        if a == "--" {
            break;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if a == "--config" {
            config = strs.get(i + 1).cloned();
            i += 1;
        } else if global_takes_value(a) {
            i += 1;
        } else if command.is_none() && COMMANDS.contains(&a) {
            command = Some(i);
        }
        i += 1;
    }
    let (Some(config), Some(pos)) = (config, command) else {
        return Ok(argv);
    };
    let flags = config_flags(Path::new(&config), Some(&strs[pos]))?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

/// Every resolved flag of `sub` (including defaults), keyed by long name.
pub fn resolved_flags(command: &clap::Command, sub: &ArgMatches) -> BTreeMap<String, toml::Value> {
    let mut out = BTreeMap::new();
    for arg in command.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if UNRECORDED.contains(&long) {
            continue;
        }
        let id = arg.get_id().as_str();
        match arg.get_action() {
            ArgAction::SetTrue => {
                if sub.get_flag(id) {
                    out.insert(long.to_string(), toml::Value::Boolean(true));
                }
            }
            ArgAction::Set => {
                if let Ok(Some(raw)) = sub.try_get_raw(id) {
                    let parts: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                    out.insert(long.to_string(), toml::Value::String(parts.join(",")));
                }
            }
            _ => {}
        }
    }
    out
}

/// Manifest text: command, schema version, then every resolved flag.
pub fn manifest_toml(command: &str, flags: &BTreeMap<String, toml::Value>) -> Result<String> {
    let mut table = toml::Table::new();
    table.insert("command".into(), toml::Value::String(command.into()));
    table.insert("schema_version".into(), toml::Value::Integer(SCHEMA_VERSION));
    for (k, v) in flags {
        table.insert(k.clone(), v.clone());
    }
    toml::to_string(&table).map_err(|e| Error::InvalidArgument(format!("manifest serialization: {e}")))
}
