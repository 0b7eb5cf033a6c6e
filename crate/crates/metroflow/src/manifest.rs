//! Run manifests: what ran, on what, with which knobs.
//!
//! Every run that writes files leaves exactly one manifest alongside them —
//! `manifest.json` in a directory output, `<file>.manifest.json` next to a
//! single-file output. The manifest carries the fully resolved
//! configuration, SHA-256 digests of every input file, and every seed the
//! run used, so re-running with the manifest's config and seeds reproduces
//! the outputs bit for bit (wall-clock fields excepted).

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::AppConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// SHA-256 of a file's contents, as lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {} for digesting: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// RFC 3339 wall-clock timestamps; the only fields two otherwise
    /// identical runs may differ in.
    pub started_at: String,
    pub finished_at: Option<String>,
    /// Named seeds the run actually consumed (with derivation documented
    /// by the consuming module).
    pub seeds: BTreeMap<String, u64>,
    /// Input path → SHA-256 digest.
    pub inputs: BTreeMap<String, String>,
    /// The fully resolved configuration, defaults materialized.
    pub config: AppConfig,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: AppConfig) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            config,
        }
    }

    pub fn record_seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    /// Digests an input file into the manifest.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn write_to(&mut self, path: &Path) -> Result<()> {
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    /// Stamps the finish time and writes `dir/manifest.json`.
    pub fn write_into_dir(&mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        self.write_to(&path)?;
        Ok(path)
    }

    /// Stamps the finish time and writes `<output>.manifest.json` next to a
    /// single-file output.
    pub fn write_sidecar(&mut self, output: &Path) -> Result<PathBuf> {
        let mut name = output.as_os_str().to_os_string();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        self.write_to(&path)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_writes_once_per_dir_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        std::fs::write(&input, "a,b\n1,2\n").unwrap();

        let mut m = RunManifest::new("compare", AppConfig::default());
        m.record_seed("master", 42);
        m.record_input(&input).unwrap();
        let path = m.write_into_dir(dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), MANIFEST_FILE);

        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back.subcommand, "compare");
        assert_eq!(back.seeds["master"], 42);
        assert_eq!(back.inputs.len(), 1);
        assert!(back.finished_at.is_some());
        assert_eq!(back.config.training.epochs, 100);

        let manifests = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref().unwrap().file_name().to_string_lossy().contains("manifest")
            })
            .count();
        assert_eq!(manifests, 1);
    }

    #[test]
    fn sidecar_sits_next_to_the_output_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        std::fs::write(&out, "{}").unwrap();
        let mut m = RunManifest::new("ingest", AppConfig::default());
        let path = m.write_sidecar(&out).unwrap();
        assert_eq!(
            path.file_name().unwrap().to_string_lossy(),
            "report.json.manifest.json"
        );
        assert!(path.exists());
    }
}
