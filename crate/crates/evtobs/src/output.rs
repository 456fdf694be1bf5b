//! Run directories: CSV tables, JSON summaries and the config echo.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{io_err, Result};

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Vector components joined by `;`, for a single CSV cell.
pub fn vec_cell(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(io_err(&path))?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_csv<I, R>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let p = self.file(name);
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.into_iter().collect::<Vec<_>>())?;
        }
        w.flush().map_err(io_err(&p))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let p = self.file(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&p, text).map_err(io_err(&p))?;
        Ok(p)
    }

    /// `config.toml`: enough to repeat the run bit for bit.
    pub fn write_config(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let p = self.file("config.toml");
        fs::write(&p, cfg.to_toml()?).map_err(io_err(&p))?;
        Ok(p)
    }
}
