//! `manifest.json`: everything needed to rerun a command and get the same bytes.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use spad_jpd::{Error, Result};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Fully resolved parameters, defaults filled in.
    pub config: Value,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, config: Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })
    }
}
