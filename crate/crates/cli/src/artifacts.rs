//! Output directory bookkeeping. Files of a stage are written under a
//! `.partial` name and renamed when the stage succeeds, so a failed stage
//! leaves its partial files behind and never a half-written final name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Stage;

pub const MANIFEST_FILE: &str = "run_manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn partial_name(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Stamp written alongside every stage's artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("pinkslime-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("pinkslime-core".to_string(), pinkslime_core::VERSION.to_string()),
        ("feature-schema".to_string(), pinkslime_core::features::SCHEMA_VERSION.to_string()),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<String>,
    /// Relative path → sha256 of every artifact written by this run.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&s)?)
    }
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    config_hash: String,
    pending: Vec<PathBuf>,
    hashes: BTreeMap<String, String>,
    stages: Vec<String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, config_hash: &str) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root,
            config_hash: config_hash.to_string(),
            pending: Vec::new(),
            hashes: BTreeMap::new(),
            stages: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Final location of an artifact.
    pub fn path(&self, stage: Stage, name: &str) -> PathBuf {
        self.root.join(stage.dir()).join(name)
    }

    /// Final location if it exists from this or an earlier run.
    pub fn existing(&self, stage: Stage, name: &str) -> Option<PathBuf> {
        Some(self.path(stage, name)).filter(|p| p.is_file())
    }

    /// Reserves an artifact and returns the `.partial` path to write to.
    pub fn begin(&mut self, stage: Stage, name: &str) -> Result<PathBuf> {
        let path = self.path(stage, name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.pending.push(path.clone());
        Ok(partial_name(&path))
    }

    /// Renames every reserved artifact of the stage into place and writes the
    /// stage stamp.
    pub fn commit(&mut self, stage: Stage) -> Result<()> {
        let stamp = Stamp {
            stage: stage.to_string(),
            config_hash: self.config_hash.clone(),
            versions: versions(),
        };
        let p = self.begin(stage, "stamp.json")?;
        fs::write(&p, serde_json::to_string_pretty(&stamp)? + "\n")?;
        for path in std::mem::take(&mut self.pending) {
            let partial = partial_name(&path);
            fs::rename(&partial, &path)
                .with_context(|| format!("{} was reserved but not written", partial.display()))?;
            let rel = path.strip_prefix(&self.root).unwrap_or(&path);
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            self.hashes.insert(key, sha256_file(&path)?);
        }
        self.stages.push(stage.to_string());
        Ok(())
    }

    /// Forgets reserved artifacts of a failed stage; their `.partial` files
    /// stay on disk.
    pub fn abandon(&mut self) -> Vec<PathBuf> {
        std::mem::take(&mut self.pending).into_iter().map(|p| partial_name(&p)).filter(|p| p.exists()).collect()
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            config_hash: self.config_hash.clone(),
            versions: versions(),
            stages: self.stages.clone(),
            artifacts: self.hashes.clone(),
        }
    }

    pub fn write_manifest(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&self.manifest())? + "\n")?;
        Ok(path)
    }
}
