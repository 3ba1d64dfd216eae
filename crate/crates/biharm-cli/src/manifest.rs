//! Plain-text run manifest: everything needed to reproduce a run bit-exactly
//! plus a content hash per emitted artifact.

use std::io::Write;
use std::path::{Path, PathBuf};

use biharm::error::Result;

use crate::config::ExperimentConfig;

/// FNV-1a, 64 bit; cheap and dependency-free, adequate for change detection.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub struct Manifest {
    command: String,
    outputs: Vec<(PathBuf, u64)>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.outputs.push((path.to_path_buf(), fnv1a64(&bytes)));
        Ok(())
    }

    pub fn write(&self, path: &Path, config: &ExperimentConfig, seed: u64) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "tool: biharm {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "command: {}", self.command)?;
        writeln!(out, "seed: {seed}")?;
        for (p, h) in &self.outputs {
            writeln!(out, "output: {} fnv1a64:{h:016x}", p.display())?;
        }
        writeln!(out, "config:")?;
        let echo = serde_json::to_string_pretty(config)
            .map_err(|e| biharm::error::Error::Config(e.to_string()))?;
        for line in echo.lines() {
            writeln!(out, "  {line}")?;
        }
        Ok(())
    }
}
