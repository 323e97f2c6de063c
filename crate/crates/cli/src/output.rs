//! Run directories and atomic artifact writes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde::Serialize;
use uika_core::config::RunConfig;
use uika_core::model::{load_checkpoint, save_checkpoint, ParamSet};
use uika_core::training::EpochLog;

pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Creates `<out_dir>/<command>-<timestamp>-seed<seed>`, suffixed with a
    /// counter when that name is taken, and echoes the config into it.
    pub fn create(cfg: &RunConfig, command: &str, seed: Option<u64>) -> Result<Self> {
        let parent = cfg.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
        let stem = match seed {
            Some(s) => format!("{command}-{stamp}-seed{s}"),
            None => format!("{command}-{stamp}"),
        };
        let mut path = parent.join(&stem);
        let mut n = 2;
        loop {
            match fs::create_dir(&path) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    path = parent.join(format!("{stem}-{n}"));
                    n += 1;
                }
                Err(e) => return Err(e).with_context(|| format!("creating {}", path.display())),
            }
        }
        let dir = RunDir { path };
        dir.write_text("config.txt", &cfg.to_text())?;
        log::info!("run directory {}", dir.path.display());
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.file(name);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.file(name);
        write_json(&path, value)?;
        Ok(path)
    }

    /// Saves a checkpoint and reads it back to confirm it round-trips.
    pub fn write_checkpoint(&self, name: &str, params: &ParamSet) -> Result<PathBuf> {
        let path = self.file(name);
        save_checkpoint(params, &path).with_context(|| format!("writing {}", path.display()))?;
        let back = load_checkpoint(&path).with_context(|| format!("re-reading {}", path.display()))?;
        ensure!(&back == params, "checkpoint {} does not round-trip", path.display());
        Ok(path)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming {} into place", tmp.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// `stage,epoch,loss,alpha` rows; alpha is empty outside stage 2.
pub fn epochs_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("stage,epoch,loss,alpha\n");
    for e in log {
        let alpha = e.alpha.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{alpha}\n", e.stage, e.epoch, e.loss));
    }
    out
}
