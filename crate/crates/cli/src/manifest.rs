use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to replay a run: the argument vector, the parameters
/// after merging flags into files, and digests of every input read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Working directory that relative paths in `argv` resolve against.
    pub cwd: PathBuf,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
}

pub fn version() -> String {
    format!("interpnorm {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: &[String],
        params: serde_json::Value,
        seed: Option<u64>,
        inputs: &[PathBuf],
    ) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.clone(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            params,
            seed,
            version: version(),
            inputs,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Inputs whose content no longer matches the recorded digest.
    pub fn changed_inputs(&self) -> Result<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for i in &self.inputs {
            if sha256_file(&i.path)? != i.sha256 {
                changed.push(i.path.clone());
            }
        }
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_digest() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("x.csv");
        fs::write(&input, "abc").unwrap();
        let m = RunManifest::new(
            "solve",
            &["interpnorm".to_string()],
            serde_json::json!({"a": 1}),
            Some(4),
            std::slice::from_ref(&input),
        )
        .unwrap();
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
        assert!(back.changed_inputs().unwrap().is_empty());
        fs::write(&input, "abd").unwrap();
        assert_eq!(back.changed_inputs().unwrap(), vec![input]);
    }
}
