//! On-disk layout of a node's state directory.
//!
//! ```text
//! <dir>/state.json        backend tag + full system state
//! <dir>/tokens/token-<id>.jsonissued privilege tokens
//! <dir>/audits/<id>.json  audit records
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use cdedit_core::bilinear::{Backend, BackendKind};
use cdedit_core::system::SystemState;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("no state in {0}; run `cdedit chain init` first")]
    NoState(PathBuf),
    #[error("state was created for the {stored} backend, not {requested}")]
    BackendMismatch { stored: BackendKind, requested: BackendKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Persisted<B: Backend> {
    pub backend: BackendKind,
    /// Simulated clock, seconds.
    pub clock: u64,
    pub state: SystemState<B>,
}

#[derive(Deserialize)]
struct Header {
    backend: BackendKind,
}

#[derive(Debug, Clone)]
pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn state_path(&self) -> PathBuf {
        self.root.join("state.json")
    }

    pub fn tokens_dir(&self) -> PathBuf {
        self.root.join("tokens")
    }

    pub fn audits_dir(&self) -> PathBuf {
        self.root.join("audits")
    }

    pub fn exists(&self) -> bool {
        self.state_path().is_file()
    }

    /// Backend recorded in the state file.
    pub fn backend(&self) -> Result<BackendKind, StoreError> {
        let path = self.state_path();
        if !path.is_file() {
            return Err(StoreError::NoState(self.root.clone()));
        }
        Ok(read_json::<Header>(&path)?.backend)
    }

    pub fn load<B: Backend>(&self) -> Result<Persisted<B>, StoreError> {
        let stored = self.backend()?;
        if stored != B::KIND {
            return Err(StoreError::BackendMismatch { stored, requested: B::KIND });
        }
        read_json(&self.state_path())
    }

    pub fn save<B: Backend>(&self, state: &Persisted<B>) -> Result<(), StoreError> {
        write_json(&self.state_path(), state)
    }

    pub fn token_path(&self, id: u64) -> PathBuf {
        self.tokens_dir().join(format!("token-{id}.json"))
    }

    pub fn audit_path(&self, report: u64) -> PathBuf {
        self.audits_dir().join(format!("audit-{report}.json"))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json { path: path.into(), source })
}

/// Write via a temporary sibling and rename, so readers never see half a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io { path: path.into(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|source| StoreError::Json { path: path.into(), source })?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}
