//! `--config` files: flat `key=value` lines that override command-line flags.
//!
//! Each pair becomes `--key value` appended to the argument list (`true`
//! becomes a bare `--key`, `false` is dropped), and the parser keeps the last
//! occurrence of every flag. A `command=NAME` line selects the subcommand
//! when none is given. Every artifact echoes its resolved flags in this
//! format behind `# ` (JSON outputs carry the same pairs), so stripping the
//! prefix yields a config that reruns the command.

use std::ffi::OsString;
use std::io::BufRead;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::output::open;

pub const COMMANDS: [&str; 7] = ["simulate", "fit", "predict", "evaluate", "cv", "bench-wong", "bench-sst"];

pub fn parse_pairs<R: BufRead>(reader: R, origin: &Path) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!(
                "{}:{}: expected key=value, got {line:?}",
                origin.display(),
                idx + 1
            ))
        })?;
        pairs.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Value of `--config` anywhere in the arguments.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// The argument list with the config file's pairs folded in.
pub fn merge(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path).to_path_buf();
    let pairs = parse_pairs(open(&path)?, &path)?;
    let given = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .find(|a| COMMANDS.contains(&a.as_str()));

    let mut out = args;
    let mut command = None;
    let mut extra = Vec::new();
    for (key, value) in pairs {
        match key.as_str() {
            "command" => command = Some(value),
            "config" => {}
            _ => match value.as_str() {
                "true" => extra.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    extra.push(format!("--{key}").into());
                    extra.push(value.into());
                }
            },
        }
    }
    match (given, command) {
        (Some(g), Some(c)) if g != c => {
            return Err(CliError::Invalid(format!(
                "config file is for `{c}` but the command is `{g}`"
            )))
        }
        (None, Some(c)) => out.insert(1.min(out.len()), c.into()),
        _ => {}
    }
    out.extend(extra);
    Ok(out)
}
