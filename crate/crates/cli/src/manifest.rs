//! The run directory and its manifest.
//!
//! Every stage records the SHA-256 of each file it reads and writes. A later
//! stage only accepts an artifact whose current digest matches the one the
//! producing stage recorded, so edited or stale files are caught.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Stages whose records become stale when the given stage runs again.
fn downstream(stage: &str) -> &'static [&'static str] {
    match stage {
        "generate" => &["ingest", "analyze", "fit", "score", "alerts"],
        "ingest" => &["analyze", "fit", "score", "alerts"],
        "analyze" => &["fit", "score"],
        "fit" => &["score"],
        _ => &[],
    }
}

fn base(key: &str) -> &str {
    key.split(':').next().unwrap_or(key)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub stages: BTreeMap<String, StageRecord>,
    /// Wall-clock milliseconds per stage; the only non-deterministic part.
    #[serde(default)]
    pub timings_ms: BTreeMap<String, u64>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

/// Collects what one stage reads and writes.
pub struct StageWriter<'a> {
    run: &'a mut Run,
    key: String,
    record: StageRecord,
}

impl Run {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let manifest = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: corrupt manifest: {e}", path.display())))?
        } else {
            Manifest::default()
        };
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// Digest recorded for a run artifact. Each file has a single producer.
    fn recorded_digest(&self, rel: &str) -> Option<(&str, &str)> {
        self.manifest
            .stages
            .iter()
            .find_map(|(k, s)| s.outputs.get(rel).map(|d| (k.as_str(), d.as_str())))
    }

    pub fn has_artifact(&self, rel: &str) -> bool {
        self.recorded_digest(rel).is_some()
    }

    pub fn begin(&mut self, key: impl Into<String>, config: &impl Serialize) -> Result<StageWriter<'_>, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Validation(e.to_string()))?;
        let config_hash = sha256_hex(config.to_string().as_bytes());
        Ok(StageWriter {
            run: self,
            key: key.into(),
            record: StageRecord {
                config_hash,
                config,
                ..Default::default()
            },
        })
    }

    fn save(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Validation(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

impl StageWriter<'_> {
    pub fn run(&self) -> &Run {
        self.run
    }

    /// Read a run artifact after checking it against the manifest.
    pub fn read_artifact(&mut self, rel: &str, produced_by: &str) -> Result<Vec<u8>, CliError> {
        let Some((_, expected)) = self.run.recorded_digest(rel) else {
            return Err(CliError::Validation(format!(
                "{rel} is not recorded in {}; run `amlnet {produced_by}` first",
                self.run.dir.join(MANIFEST_FILE).display()
            )));
        };
        let expected = expected.to_string();
        let path = self.run.dir.join(rel);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let actual = sha256_hex(&bytes);
        if actual != expected {
            return Err(CliError::Validation(format!(
                "{} was modified after `amlnet {produced_by}` wrote it (sha256 {actual}, manifest {expected}); re-run that stage",
                path.display()
            )));
        }
        self.record.inputs.insert(rel.to_string(), actual);
        Ok(bytes)
    }

    /// Read a file from outside the run directory, recording its digest
    /// under `name`.
    pub fn read_external(&mut self, name: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        require_file(name, path)?;
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let label = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        self.record.inputs.insert(format!("{name}:{label}"), sha256_hex(&bytes));
        Ok(bytes)
    }

    /// Note a digest for an input that was not read as a file.
    pub fn note_input(&mut self, name: &str, digest: String) {
        self.record.inputs.insert(name.to_string(), digest);
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.run.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn count(&mut self, name: &str, value: usize) {
        self.record.counts.insert(name.to_string(), value as u64);
    }

    /// Store the stage record, dropping records that depended on an
    /// earlier run of this stage.
    pub fn commit(self, elapsed: Duration) -> Result<(), CliError> {
        let stale = downstream(base(&self.key));
        let m = &mut self.run.manifest;
        m.tool_version = env!("CARGO_PKG_VERSION").to_string();
        m.stages.retain(|k, _| !stale.contains(&base(k)));
        for stage in m.stages.values_mut() {
            stage.outputs.retain(|path, _| !self.record.outputs.contains_key(path));
        }
        m.stages.insert(self.key.clone(), self.record);
        m.timings_ms.insert(self.key, elapsed.as_millis() as u64);
        let stages = &m.stages;
        m.timings_ms.retain(|k, _| stages.contains_key(k));
        self.run.save()
    }
}

/// A named input that does not exist is a usage error, not an I/O failure.
pub fn require_file(name: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} file {} does not exist", path.display())))
    }
}
