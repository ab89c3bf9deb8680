//! Norm tables cached on disk, keyed by torus and cutoff.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use scatterlab_core::lattice::{build_norm_table, load_table, save_table, NormTable, TorusSpec};
use scatterlab_core::util::fmt17;

use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CacheInfo {
    pub path: PathBuf,
    pub sha256: String,
    #[serde(skip)]
    pub hit: bool,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn entry_path(dir: &Path, torus: &TorusSpec, cutoff: f64) -> Result<PathBuf, CliError> {
    let key = format!("{}|{}", serde_json::to_string(torus)?, fmt17(cutoff));
    let digest = Sha256::digest(key.as_bytes());
    Ok(dir.join(format!("norms-{}.slnt", &hex(&digest)[..16])))
}

/// Loads the table for `(torus, cutoff)` from `dir`, building and storing it on a miss.
pub fn table(dir: &Path, torus: &TorusSpec, cutoff: f64) -> Result<(NormTable, CacheInfo), CliError> {
    fs::create_dir_all(dir)?;
    let path = entry_path(dir, torus, cutoff)?;
    if path.exists() {
        match load_table(&path) {
            Ok(t) if t.torus() == torus && t.cutoff() == cutoff => {
                info!("cache hit: {}", path.display());
                let sha256 = hex(&Sha256::digest(fs::read(&path)?));
                return Ok((t, CacheInfo { path, sha256, hit: true }));
            }
            Ok(_) => warn!("cache entry {} belongs to another table; rebuilding", path.display()),
            Err(e) => warn!("cache entry {} unreadable ({e}); rebuilding", path.display()),
        }
    }
    info!("cache miss: building norms up to {cutoff}");
    let t = build_norm_table(torus, cutoff)?;
    save_table(&t, &path)?;
    let sha256 = hex(&Sha256::digest(fs::read(&path)?));
    Ok((t, CacheInfo { path, sha256, hit: false }))
}
