//! On-disk layout: `root/feasible/` and `root/infeasible/`, each holding
//! `<name>.txt` plus `<name>.meta.json`.

use crate::io::{parse_instance_text, write_instance_text, ParseError};
use crate::metadata::{MetadataError, MetadataRecord, Status};
use crate::model::Instance;
use crate::pipeline::{instance_name, Outcome};
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Metadata { path: PathBuf, source: MetadataError },
    #[error("invalid instance name '{0}'")]
    BadName(String),
    #[error("instance '{0}' not found")]
    NotFound(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistedPaths {
    pub name: String,
    pub instance: PathBuf,
    pub metadata: PathBuf,
}

/// Names are restricted to `[A-Za-z0-9_.-]` and may not start with a dot.
pub fn is_safe_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Writes the outcome under `root`. Rejected outcomes are skipped unless
/// `persist_rejects`. A name already taken gets `_1`, `_2`, ... appended.
pub fn persist_outcome(outcome: &Outcome, root: &Path, persist_rejects: bool) -> Result<Option<PersistedPaths>, StoreError> {
    if !outcome.accepted() && !persist_rejects {
        return Ok(None);
    }
    let base = instance_name(&outcome.metadata.config, &outcome.instance, outcome.metadata.seed);
    let dir = root.join(outcome.metadata.status.directory());
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let text = write_instance_text(&outcome.instance);
    let mut suffix = 0usize;
    loop {
        let name = if suffix == 0 { base.clone() } else { format!("{base}_{suffix}") };
        let instance_path = dir.join(format!("{name}.txt"));
        match OpenOptions::new().write(true).create_new(true).open(&instance_path) {
            Ok(mut file) => {
                if suffix > 0 {
                    log::warn!("name {base} already taken in {}, writing {name}", dir.display());
                }
                file.write_all(text.as_bytes()).map_err(io_err(&instance_path))?;
                let metadata_path = dir.join(format!("{name}.meta.json"));
                fs::write(&metadata_path, outcome.metadata.to_json()).map_err(io_err(&metadata_path))?;
                return Ok(Some(PersistedPaths { name, instance: instance_path, metadata: metadata_path }));
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => suffix += 1,
            Err(e) => return Err(io_err(&instance_path)(e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredInstance {
    pub name: String,
    pub status: Status,
    pub text: String,
    pub instance: Instance,
    pub metadata_json: String,
    pub metadata: MetadataRecord,
}

/// Looks `name` up in `feasible/` then `infeasible/`.
pub fn load_instance(root: &Path, name: &str) -> Result<StoredInstance, StoreError> {
    if !is_safe_name(name) {
        return Err(StoreError::BadName(name.to_string()));
    }
    for dir in ["feasible", "infeasible"] {
        let path = root.join(dir).join(format!("{name}.txt"));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => continue,
            Err(e) => return Err(io_err(&path)(e)),
        };
        let instance = parse_instance_text(&text).map_err(|source| StoreError::Parse { path: path.clone(), source })?;
        let meta_path = root.join(dir).join(format!("{name}.meta.json"));
        let metadata_json = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let metadata = MetadataRecord::from_json(&metadata_json)
            .map_err(|source| StoreError::Metadata { path: meta_path.clone(), source })?;
        if metadata.status.directory() != dir {
            return Err(StoreError::Metadata {
                path: meta_path,
                source: MetadataError::Inconsistent(format!("status {} stored under {dir}/", metadata.status.label())),
            });
        }
        return Ok(StoredInstance { name: name.to_string(), status: metadata.status, text, instance, metadata_json, metadata });
    }
    Err(StoreError::NotFound(name.to_string()))
}
