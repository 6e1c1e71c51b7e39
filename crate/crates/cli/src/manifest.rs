//! Run manifests and output-directory handling.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "run.json";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub name: String,
    /// Relative to the run directory.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// Input paths, made absolute.
    pub inputs: BTreeMap<String, PathBuf>,
    pub artifacts: Vec<Artifact>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            status: "running".into(),
            seed: None,
            config: None,
            inputs: BTreeMap::new(),
            artifacts: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        }
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> CliResult<()> {
        let abs = fs::canonicalize(path).map_err(|e| CliError::data(path.display(), e))?;
        self.inputs.insert(name.to_string(), abs);
        Ok(())
    }

    pub fn input(&self, name: &str) -> CliResult<&Path> {
        self.inputs
            .get(name)
            .map(PathBuf::as_path)
            .ok_or_else(|| CliError::Config(format!("manifest has no `{name}` input")))
    }

    pub fn finish(&mut self, status: &str, dir: &Path) -> CliResult<()> {
        self.status = status.to_string();
        self.finished_unix = unix_now();
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::data("manifest", e))?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n").map_err(|e| CliError::data(dir.join(MANIFEST_FILE).display(), e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Create (or, with `force`, reuse) `path` and take its lock. A
    /// non-empty directory is refused unless `force` is set; a held lock is
    /// always refused.
    pub fn claim(path: &Path, force: bool) -> CliResult<Self> {
        let lock = path.join(LOCK_FILE);
        if lock.exists() {
            return Err(CliError::Data(format!(
                "{} is locked by another run (remove {} if that run is gone)",
                path.display(),
                lock.display()
            )));
        }
        if path.exists() {
            let mut entries = fs::read_dir(path).map_err(|e| CliError::data(path.display(), e))?;
            if entries.next().is_some() && !force {
                return Err(CliError::Data(format!("{} is not empty; pass --force to overwrite", path.display())));
            }
        } else {
            fs::create_dir_all(path).map_err(|e| CliError::data(path.display(), e))?;
        }
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| CliError::data(format!("locking {}", path.display()), e))?;
        let _ = writeln!(f, "{}", std::process::id());
        Ok(Self { path: path.to_path_buf(), lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn create(&self, name: &str) -> CliResult<File> {
        File::create(self.join(name)).map_err(|e| CliError::data(self.join(name).display(), e))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
