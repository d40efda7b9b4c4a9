use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rrm::output::Table;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Record written next to every output table.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub version: String,
    /// Hash of command, resolved config and version; repeated in the table
    /// header. Excludes paths and timing so identical runs hash identically.
    pub hash: String,
}

pub fn config_hash(command: &str, config: &serde_json::Value) -> String {
    let canonical = serde_json::json!({ "command": command, "config": config, "version": VERSION });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

pub struct Output {
    pub dir: PathBuf,
    pub gnuplot: bool,
}

impl Output {
    /// Write `table` as `<stem>.csv` (or `<stem>.dat`) and return its path.
    pub fn write_table(&self, stem: &str, table: &Table, hash: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating output directory {}", self.dir.display()))?;
        let meta = format!("rrm {VERSION} manifest-sha256={hash}");
        let (path, text) = if self.gnuplot {
            (self.dir.join(format!("{stem}.dat")), table.to_gnuplot(&meta))
        } else {
            (self.dir.join(format!("{stem}.csv")), table.to_csv(&meta)?)
        };
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_manifest(&self, stem: &str, manifest: &RunManifest) -> Result<PathBuf> {
        let path = self.dir.join(format!("{stem}.manifest.json"));
        let text = serde_json::to_string_pretty(manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_only() {
        let a = config_hash("transmission", &serde_json::json!({"k": 6}));
        assert_eq!(a, config_hash("transmission", &serde_json::json!({"k": 6})));
        assert_ne!(a, config_hash("transmission", &serde_json::json!({"k": 5})));
        assert_eq!(a.len(), 64);
    }
}
