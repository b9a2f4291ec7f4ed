//! Run manifests: enough to rerun a command and check its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand followed by every flag with its resolved value, without
    /// the output location.
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: Value,
    #[serde(default)]
    pub metadata: Value,
    /// File name to lowercase hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        args: &impl Serialize,
        seed: Option<u64>,
        config: Value,
    ) -> CliResult<Self> {
        Ok(RunManifest {
            tool: "sip-forge".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: canonical_command(subcommand, args)?,
            seed,
            config,
            metadata: Value::Null,
            outputs: BTreeMap::new(),
        })
    }

    /// Hashes `files` inside `dir` and writes the manifest next to them.
    pub fn finish(mut self, dir: &Path, files: &[&str]) -> CliResult<()> {
        for f in files {
            self.outputs
                .insert(f.to_string(), sha256_file(&dir.join(f))?);
        }
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files whose current digest differs from the recorded one.
    pub fn stale_outputs(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|(f, want)| sha256_file(&dir.join(f)).map_or(true, |got| &got != *want))
            .map(|(f, _)| f.clone())
            .collect()
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Turns a flag struct serialized with kebab-case keys back into argv form.
pub fn canonical_command(subcommand: &str, args: &impl Serialize) -> CliResult<Vec<String>> {
    let mut argv = vec![subcommand.to_string()];
    let Value::Object(map) = serde_json::to_value(args)? else {
        return Err(CliError::Config("flags must serialize to an object".into()));
    };
    for (k, v) in map {
        let items = match v {
            Value::Array(items) => items,
            other => vec![other],
        };
        for item in items {
            match item {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => argv.push(format!("--{k}")),
                Value::String(s) => argv.extend([format!("--{k}"), s]),
                other => argv.extend([format!("--{k}"), other.to_string()]),
            }
        }
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    #[serde(rename_all = "kebab-case")]
    struct Flags {
        seed: u64,
        p_drop: f64,
        mode: &'static str,
        verbose: bool,
        quiet: bool,
        band: Option<u32>,
        input: Vec<&'static str>,
    }

    #[test]
    fn canonical_argv() {
        let f = Flags {
            seed: 3,
            p_drop: 0.4,
            mode: "det",
            verbose: true,
            quiet: false,
            band: None,
            input: vec!["a", "b"],
        };
        let argv = canonical_command("gen", &f).unwrap();
        assert_eq!(
            argv,
            [
                "gen",
                "--input",
                "a",
                "--input",
                "b",
                "--mode",
                "det",
                "--p-drop",
                "0.4",
                "--seed",
                "3",
                "--verbose"
            ]
        );
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
