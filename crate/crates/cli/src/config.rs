//! Flat `key=value` configuration and run manifests.
//!
//! Every command resolves its parameters as: built-in default, overridden
//! by the `--config` file, overridden by command-line flags. The merged
//! result is written to `<out>/run_manifest.txt`, which is itself a valid
//! config file: re-running the same command with `--config run_manifest.txt`
//! reproduces the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub const MANIFEST_FILE: &str = "run_manifest.txt";

/// Parsed `key=value` file. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("BadConfigLine: line {}: `{line}`", i + 1)))?;
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::input(format!("DuplicateConfigKey: {key}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::input(format!("MissingInput: {}: {e}", path.display()))
                })?;
                Self::parse(&text)
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::input(format!("BadConfigValue: {key}={raw}"))),
        }
    }

    /// The command a manifest or config targets, when recorded.
    pub fn command(&self) -> Option<&str> {
        self.get("command")
    }

    /// Rejects keys the invoking command does not understand.
    pub fn check_keys(&self, accepted: &[&str]) -> Result<(), CliError> {
        for key in self.entries.keys() {
            if key != "command" && !accepted.contains(&key.as_str()) {
                return Err(CliError::input(format!("UnknownConfigKey: {key}")));
            }
        }
        Ok(())
    }
}

/// Effective parameters of a run, written as the manifest.
#[derive(Debug, Clone)]
pub struct Manifest {
    command: &'static str,
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self { command, entries: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) -> &mut Self {
        if let Some(v) = value {
            self.set(key, v);
        }
        self
    }

    pub fn render(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (key, value) in &self.entries {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join(MANIFEST_FILE);
        crate::write_output(&path, &self.render())?;
        Ok(path)
    }
}

/// Verifies a config recorded for one command is not replayed into
/// another.
pub fn check_command(cfg: &KvMap, command: &'static str) -> Result<(), CliError> {
    if let Some(recorded) = cfg.command() {
        if recorded != command {
            return Err(CliError::input(format!(
                "CommandMismatch: config records `{recorded}`, invoked `{command}`"
            )));
        }
    }
    Ok(())
}
