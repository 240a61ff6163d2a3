//! Output plumbing: deterministic CSV/JSON writers stamped with the config
//! hash and seed so identical configs reproduce outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut writer = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(path)
    }

    pub fn write_json<V: Serialize>(&self, name: &str, value: &V) -> Result<PathBuf> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Generic pass/fail check row used by the identity suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub scenario: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    pub mesh_n: usize,
    pub k: usize,
    pub config: String,
}
