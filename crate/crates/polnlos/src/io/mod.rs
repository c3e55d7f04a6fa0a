//! File formats and run manifests: JSON scene configs, the PNLT binary
//! matrix format, 16-bit PGM images, and CSV sweep tables.
//!
//! All writes are whole-file atomic: content goes to a `.tmp` sibling
//! which is then renamed over the target.

pub mod config;
pub mod csv;
pub mod matrix;
pub mod pgm;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use config::{parse_config, serialize_config};
pub use csv::write_sweep_csv;
pub use matrix::{read_matrix, read_observation, write_matrix, write_observation};
pub use pgm::{read_pgm, write_pgm};

/// Atomically replace `path` with `bytes`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Record of one CLI invocation, written next to its outputs so every
/// artifact can be traced back to a config, seed, and tool version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<String>,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config: None,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            seed,
            version: crate::VERSION.to_string(),
        }
    }

    /// Write `<output>.manifest.json` for the first declared output.
    pub fn write_alongside(&self) -> Result<()> {
        if let Some(first) = self.outputs.first() {
            let path = format!("{first}.manifest.json");
            let mut body = serde_json::to_string_pretty(self)?;
            body.push('\n');
            atomic_write(Path::new(&path), body.as_bytes())?;
        }
        Ok(())
    }
}
