use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub const MANIFEST_SCHEMA: &str = "spot-manifest/1";
pub const RUN_MANIFEST: &str = "run-manifest.json";

#[derive(Debug, Serialize)]
pub struct Entry {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record of one invocation. Output paths are relative
/// to the manifest's directory so that two runs into different
/// directories produce the same bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub settings: BTreeMap<String, String>,
    pub inputs: Vec<Entry>,
    pub outputs: Vec<Entry>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            settings: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.settings.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(Entry {
            path: path.display().to_string(),
            sha256: hash_path(path)?,
        });
        Ok(self)
    }

    /// Writes the manifest to `at`, recording `outputs` relative to its
    /// directory.
    pub fn write(mut self, at: &Path, outputs: &[PathBuf]) -> Result<()> {
        let base = at.parent().unwrap_or(Path::new(""));
        for out in outputs {
            let rel = out.strip_prefix(base).unwrap_or(out);
            self.outputs.push(Entry {
                path: rel.display().to_string(),
                sha256: hash_path(out)?,
            });
        }
        if let Some(dir) = at.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let text = serde_json::to_string_pretty(&self)? + "\n";
        fs::write(at, text).with_context(|| format!("writing {}", at.display()))
    }
}

/// Manifest location for a run whose main output is `out`.
pub fn manifest_for(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join(RUN_MANIFEST)
    } else {
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{name}.manifest.json"))
    }
}

/// SHA-256 of a file, or of a directory's sorted `relpath\0filehash\n`
/// listing. Run manifests and run logs are left out.
pub fn hash_path(path: &Path) -> Result<String> {
    if path.is_file() {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(hex::encode(Sha256::digest(&bytes)));
    }
    let mut h = Sha256::new();
    let mut files: Vec<PathBuf> = WalkDir::new(path)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name != RUN_MANIFEST && !name.ends_with(".manifest.json") && !p.components().any(|c| c.as_os_str() == "runs")
        })
        .collect();
    files.sort();
    for f in files {
        let rel = f.strip_prefix(path).unwrap_or(&f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(hash_path(&f)?.as_bytes());
        h.update(b"\n");
    }
    Ok(hex::encode(h.finalize()))
}
