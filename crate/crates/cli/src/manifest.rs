use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elastic_monotonicity::farfield::Calibration;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationEntry {
    pub n: usize,
    pub sigma: f64,
    pub defect: f64,
    pub defect_at_one: f64,
}

/// Provenance record, written when a run starts and rewritten when it ends.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub status: String,
    pub config_sha256: String,
    pub schema_version: u32,
    pub versions: BTreeMap<String, String>,
    pub threads: usize,
    pub ladder: Vec<usize>,
    pub seed: u64,
    /// Seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub calibration: Vec<CalibrationEntry>,
    /// `‖S*S − I‖₂` at `σ = 1`, keyed by `N`.
    pub unitarity_defects: BTreeMap<usize, f64>,
    pub tolerances: serde_json::Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    path: PathBuf,
}

impl RunManifest {
    pub fn start(command: &str, config_bytes: &[u8], out: &Path, ladder: &[usize], seed: u64) -> std::io::Result<Self> {
        let mut versions = BTreeMap::new();
        versions.insert("elastic-monotonicity".to_string(), elastic_monotonicity::VERSION.to_string());
        versions.insert("elastic-mono-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let hash = Sha256::digest(config_bytes);
        let m = RunManifest {
            command: command.to_string(),
            status: "running".into(),
            config_sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
            schema_version: crate::config::SCHEMA_VERSION,
            versions,
            threads: rayon::current_num_threads(),
            ladder: ladder.to_vec(),
            seed,
            timings: BTreeMap::new(),
            calibration: Vec::new(),
            unitarity_defects: BTreeMap::new(),
            tolerances: serde_json::Value::Null,
            outputs: Vec::new(),
            warnings: Vec::new(),
            error: None,
            path: out.join("manifest.json"),
        };
        m.write()?;
        Ok(m)
    }

    pub fn write(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(&self.path, text + "\n")
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(phase.to_string()).or_default() += t.elapsed().as_secs_f64();
        out
    }

    pub fn record_calibration(&mut self, n: usize, c: &Calibration) {
        self.calibration.push(CalibrationEntry {
            n,
            sigma: c.sigma,
            defect: c.defect,
            defect_at_one: c.defect_at_one,
        });
        self.unitarity_defects.insert(n, c.defect_at_one);
    }

    pub fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}
