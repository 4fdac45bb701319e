//! Flat `key = value` run configuration files.
//!
//! A file mirrors long flags of one subcommand. Its entries are spliced into
//! the argument list ahead of the user's own arguments, so explicit flags
//! win. The same format is written back as `run_config.txt` with every
//! effective value, which makes a run replayable with `--config`.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::anyhow;
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

/// Flags that locate a run rather than describe it.
pub const UNRECORDED: &[&str] = &["out", "config", "resume"];

fn is_switch(cmd: &Command, long: &str) -> Option<bool> {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(long))
        .map(|a| !a.get_action().takes_values())
}

pub enum ConfigError {
    Io(anyhow::Error),
    /// Malformed line or unknown key; reported like a bad flag.
    Syntax(String),
}

/// Parse `path` into command-line arguments for subcommand `cmd`.
pub fn file_args(path: &Path, cmd: &Command) -> Result<Vec<OsString>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| {
        ConfigError::Io(anyhow!(e).context(format!("cannot read config file {}", path.display())))
    })?;
    macro_rules! bail {
        ($($t:tt)*) => { return Err(ConfigError::Syntax(format!($($t)*))) };
    }
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if UNRECORDED.contains(&key.as_str()) {
            continue;
        }
        match is_switch(cmd, &key) {
            None => bail!(
                "{}:{}: `{key}` is not an option of `{}`",
                path.display(),
                i + 1,
                cmd.get_name()
            ),
            Some(true) => match value {
                "true" => args.push(format!("--{key}").into()),
                "false" => {}
                other => bail!("{}:{}: `{key}` takes true or false, got `{other}`", path.display(), i + 1),
            },
            Some(false) => args.push(format!("--{key}={value}").into()),
        }
    }
    Ok(args)
}

/// Every effective option of a parsed subcommand, defaults included, sorted
/// by name.
pub fn render(cmd: &Command, matches: &ArgMatches) -> String {
    let mut lines = Vec::new();
    for arg in cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        let id = arg.get_id().as_str();
        if UNRECORDED.contains(&long) || matches.value_source(id).is_none() {
            continue;
        }
        let values: Vec<String> = matches
            .get_raw(id)
            .map(|v| v.map(|s| s.to_string_lossy().into_owned()).collect())
            .unwrap_or_default();
        if !arg.get_action().takes_values() {
            let on = matches.value_source(id) != Some(ValueSource::DefaultValue)
                && values.first().map(String::as_str) != Some("false");
            if on {
                lines.push(format!("{long} = true"));
            }
            continue;
        }
        if let Some(v) = values.last() {
            lines.push(format!("{long} = {v}"));
        }
    }
    lines.sort();
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
