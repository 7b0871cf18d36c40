//! Run manifests: every experiment run gets a directory with the config
//! echo, the artifacts it produced, and a manifest recording hashes and
//! timings so a re-run can be checked byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub name: String,
    pub started_unix_s: u64,
    pub wall_ms: u64,
    pub stage_ms: Vec<(String, u64)>,
    pub config_toml: String,
    pub artifacts: Vec<ArtifactRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct RunContext {
    pub dir: PathBuf,
    manifest: RunManifest,
    t0: Instant,
    stage_t0: Instant,
}

impl RunContext {
    /// Create `base/<unix-seconds>-<name>/` and echo the config into it.
    pub fn create(base: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_secs();
        let mut dir = base.join(format!("{now}-{}", cfg.name));
        let mut suffix = 1;
        while dir.exists() {
            dir = base.join(format!("{now}-{}-{suffix}", cfg.name));
            suffix += 1;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let config_toml = cfg.to_toml_string();
        let mut ctx = Self {
            dir,
            manifest: RunManifest {
                tool: "crdm".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                experiment: cfg.experiment.as_str().into(),
                name: cfg.name.clone(),
                started_unix_s: now,
                wall_ms: 0,
                stage_ms: Vec::new(),
                config_toml: config_toml.clone(),
                artifacts: Vec::new(),
            },
            t0: Instant::now(),
            stage_t0: Instant::now(),
        };
        ctx.write_artifact("config", "config.toml", config_toml.as_bytes())?;
        Ok(ctx)
    }

    pub fn write_artifact(&mut self, name: &str, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.manifest.artifacts.push(ArtifactRecord {
            name: name.to_string(),
            file: file.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Record a file that was written directly into the run directory.
    pub fn note_artifact(&mut self, name: &str, file: &str) -> Result<()> {
        let path = self.dir.join(file);
        let bytes = fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.manifest.artifacts.push(ArtifactRecord {
            name: name.to_string(),
            file: file.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn end_stage(&mut self, name: &str) {
        let ms = self.stage_t0.elapsed().as_millis() as u64;
        self.manifest.stage_ms.push((name.to_string(), ms));
        self.stage_t0 = Instant::now();
    }

    /// Write manifest.json; returns the run directory.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.wall_ms = self.t0.elapsed().as_millis() as u64;
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Malformed { what: "manifest json", detail: e.to_string() })?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, json).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(self.dir)
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp::config::ExperimentKind;

    #[test]
    fn run_dir_holds_config_and_manifest() {
        let base = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::preset(ExperimentKind::WeightTraj);
        let mut ctx = RunContext::create(base.path(), &cfg).unwrap();
        ctx.write_artifact("report", "report.json", b"{}").unwrap();
        ctx.end_stage("noop");
        let dir = ctx.finish().unwrap();
        assert!(dir.join("config.toml").exists());
        assert!(dir.join("report.json").exists());
        let manifest: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.artifacts.len(), 2);
        assert_eq!(manifest.artifacts[1].sha256, sha256_hex(b"{}"));
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
