//! Run manifest: which artifacts exist, their checksums, per-case status.
//!
//! The manifest makes reruns idempotent (finished cases are skipped when
//! their artifacts still check out) and records failures without aborting
//! the rest of the matrix.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Done,
    Failed,
}

/// One simulation shared by every SNR level of a (speed-load, crack) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimEntry {
    pub speed_load: String,
    pub crack: String,
    /// Path of the `.bin`/`.json` pair, relative to the run directory,
    /// without extension.
    pub base: PathBuf,
    pub bin_sha256: String,
    pub from_cache: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseEntry {
    pub id: String,
    pub speed_load: String,
    pub crack: String,
    pub snr_db: f64,
    /// Noise seed derived from the master seed and the case labels.
    pub seed: u64,
    pub status: CaseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Artifact path (relative to the run directory) → content hash.
    pub artifacts: BTreeMap<PathBuf, String>,
    pub from_cache: bool,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_shaft_freq_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of the resolved experiment (config + plant, output path aside).
    pub config_sha256: String,
    pub master_seed: u64,
    pub sims: BTreeMap<String, SimEntry>,
    /// Declared-case order: speed-load, then crack, then SNR.
    pub cases: Vec<CaseEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_csv_sha256: Option<String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<RunManifest> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let path = run_dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn case(&self, id: &str) -> Option<&CaseEntry> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn failed_cases(&self) -> impl Iterator<Item = &CaseEntry> {
        self.cases.iter().filter(|c| c.status == CaseStatus::Failed)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// True when every recorded artifact still exists with its recorded hash.
pub fn artifacts_intact(run_dir: &Path, artifacts: &BTreeMap<PathBuf, String>) -> bool {
    artifacts.iter().all(|(rel, expected)| {
        sha256_file(&run_dir.join(rel)).map(|h| &h == expected).unwrap_or(false)
    })
}
