//! Run directories: exclusive lock, atomic artifacts and the manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lyricvec::util::write_atomic;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const RUN_CONFIG: &str = "run_config.txt";
const LOCK: &str = ".lock";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the configuration, inputs and stage name that produced it.
    pub key: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// Input path -> sha256.
    pub inputs: BTreeMap<String, String>,
    /// Artifact file name (relative to the run directory) -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

/// Removes the lock file when dropped.
struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

pub struct RunDir {
    root: PathBuf,
    manifest: Manifest,
    previous: Option<Manifest>,
    _lock: Lock,
}

impl RunDir {
    /// Create or reopen `root` for one subcommand run. Fails if another run
    /// holds the directory.
    pub fn open(
        root: &Path,
        command: &str,
        config_text: &str,
        seed: Option<u64>,
        inputs: &[PathBuf],
    ) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create run directory {}", root.display()))?;
        let lock_path = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => anyhow::bail!(
                "run directory {} is in use (remove {} if no run is active)",
                root.display(),
                lock_path.display()
            ),
            Err(e) => return Err(e).context("cannot create lock file"),
        }
        let lock = Lock(lock_path);
        let previous = fs::read(root.join(MANIFEST))
            .ok()
            .and_then(|b| serde_json::from_slice::<Manifest>(&b).ok());
        let mut manifest = Manifest {
            tool: format!("lyricvec {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config_sha256: sha256_bytes(config_text.as_bytes()),
            seed,
            ..Default::default()
        };
        for p in inputs {
            manifest
                .inputs
                .insert(p.display().to_string(), sha256_file(p)?);
        }
        let mut dir = RunDir {
            root: root.to_path_buf(),
            manifest,
            previous,
            _lock: lock,
        };
        dir.write(RUN_CONFIG, config_text.as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest
            .outputs
            .insert(name.to_string(), sha256_bytes(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut bytes = Vec::new();
        for r in rows {
            serde_json::to_writer(&mut bytes, r)?;
            bytes.push(b'\n');
        }
        self.write(name, &bytes)
    }

    fn stage_key(&self, stage: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.manifest.command.as_bytes());
        h.update([0]);
        h.update(self.manifest.config_sha256.as_bytes());
        for (p, s) in &self.manifest.inputs {
            h.update(p.as_bytes());
            h.update(s.as_bytes());
        }
        h.update([0]);
        h.update(stage.as_bytes());
        hex::encode(h.finalize())
    }

    /// Output of a stage completed by an earlier run with the same
    /// configuration and inputs, if its file is still intact.
    pub fn completed_stage(&self, stage: &str) -> Option<PathBuf> {
        let rec = self.previous.as_ref()?.stages.get(stage)?;
        if rec.key != self.stage_key(stage) {
            return None;
        }
        let path = self.path(&rec.file);
        (sha256_file(&path).ok()? == rec.sha256).then_some(path)
    }

    /// Record a finished stage whose output was written as `file` and persist
    /// the manifest so an interrupted run can resume from here.
    pub fn finish_stage(&mut self, stage: &str, file: &str) -> Result<()> {
        let sha = match self.manifest.outputs.get(file) {
            Some(s) => s.clone(),
            None => {
                let s = sha256_file(&self.path(file))?;
                self.manifest.outputs.insert(file.to_string(), s.clone());
                s
            }
        };
        let rec = StageRecord {
            key: self.stage_key(stage),
            file: file.to_string(),
            sha256: sha,
        };
        self.manifest.stages.insert(stage.to_string(), rec);
        self.save_manifest()
    }

    /// Carry a stage completed by an earlier run into this run's manifest.
    pub fn reuse_stage(&mut self, stage: &str) -> Result<()> {
        let rec = self
            .previous
            .as_ref()
            .and_then(|p| p.stages.get(stage))
            .cloned()
            .with_context(|| format!("no recorded stage `{stage}`"))?;
        self.manifest
            .outputs
            .insert(rec.file.clone(), rec.sha256.clone());
        self.manifest.stages.insert(stage.to_string(), rec);
        self.save_manifest()
    }

    pub fn save_manifest(&self) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.path(MANIFEST), &bytes)?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        self.save_manifest()
    }
}
