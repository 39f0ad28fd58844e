//! SHA-256 manifest of a run directory's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::ExperimentError;

pub const MANIFEST: &str = "checksums.sha256";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    /// Manifest of `dir`, empty if there is none yet.
    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
        let mut entries = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (hash, name) =
                line.split_once("  ").ok_or_else(|| ExperimentError::Manifest(format!("bad line {line:?}")))?;
            entries.insert(name.to_string(), hash.to_string());
        }
        Ok(Self { entries })
    }

    pub fn save(&self, dir: &Path) -> Result<(), ExperimentError> {
        let text: String = self.entries.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
        let path = dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| ExperimentError::io(&path, e))
    }

    /// Files whose contents no longer match, or that have gone missing.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(name, hash)| fs::read(dir.join(name)).map(|b| sha256_hex(&b) != **hash).unwrap_or(true))
            .map(|(name, _)| name.clone())
            .collect()
    }
}

/// Write `bytes` to `dir/name` and record its hash in the manifest.
pub fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| ExperimentError::io(&path, e))?;
    let mut m = Manifest::load(dir)?;
    m.entries.insert(name.to_string(), sha256_hex(bytes));
    m.save(dir)
}
