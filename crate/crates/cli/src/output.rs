//! Output files. Every file carries the config digest and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// Provenance of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &'static str, config_bytes: &[u8], seed: u64) -> Self {
        Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: siuc_core::sha256_hex(config_bytes),
            seed,
        }
    }

    fn comment(&self, lead: &str) -> String {
        format!(
            "{lead} siuc {} {} config_sha256={} seed={}\n",
            self.command, self.version, self.config_sha256, self.seed
        )
    }
}

pub struct OutDir {
    dir: PathBuf,
    pub meta: Meta,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a leading `#` provenance line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = self.meta.comment("#") + body;
        self.write(name, text)
    }

    /// Pretty JSON object `{"meta": …, <fields of value>}`.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let body = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
        let mut obj = json!({ "meta": self.meta });
        match body {
            Value::Object(map) => obj.as_object_mut().unwrap().extend(map),
            other => {
                obj["data"] = other;
            }
        }
        let text =
            serde_json::to_string_pretty(&obj).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        self.write(name, text)
    }

    /// Fixed-format MPS with a `*` provenance line.
    pub fn mps(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = self.meta.comment("*") + body;
        self.write(name, text)
    }
}
