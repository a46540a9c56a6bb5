//! CSV / JSON emission and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Full-double-precision cell formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    rows: Vec<String>,
}

impl CsvWriter {
    /// `header` names every column with units, e.g. `"T [Omega]"`.
    pub fn new(header: &[&str]) -> Self {
        Self {
            rows: vec![header.join(",")],
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn row_f64(&mut self, cells: &[f64]) {
        self.row(&cells.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = self.rows.join("\n");
        s.push('\n');
        s.into_bytes()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    code_version: &'a str,
    rng: &'a str,
    seed: u64,
    workers: usize,
    wall_time_s: f64,
    config_sha256: String,
    config: &'a str,
    outputs: Vec<OutputEntry>,
}

/// Collects experiment outputs and writes `<name>.csv`,
/// `<name>.summary.json` and `<name>.manifest.json`.
pub struct RunWriter {
    pub name: String,
    out_dir: PathBuf,
    started: Instant,
    pub seed: u64,
    pub workers: usize,
    config_text: String,
}

impl RunWriter {
    pub fn new(name: &str, out_dir: &Path, seed: u64, workers: usize, config_text: &str) -> Self {
        Self {
            name: name.to_string(),
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            seed,
            workers,
            config_text: config_text.to_string(),
        }
    }

    pub fn finalize<S: Serialize>(
        &self,
        csv: &CsvWriter,
        summary: &S,
    ) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.out_dir)?;
        let config_sha256 = sha256_hex(self.config_text.as_bytes());

        let csv_path = self.out_dir.join(format!("{}.csv", self.name));
        let csv_bytes = csv.to_bytes();
        fs::write(&csv_path, &csv_bytes)?;

        #[derive(Serialize)]
        struct SummaryEnvelope<'a, S: Serialize> {
            experiment: &'a str,
            config_sha256: &'a str,
            #[serde(flatten)]
            body: &'a S,
        }
        let summary_path = self.out_dir.join(format!("{}.summary.json", self.name));
        let summary_bytes = serde_json::to_vec_pretty(&SummaryEnvelope {
            experiment: &self.name,
            config_sha256: &config_sha256,
            body: summary,
        })?;
        fs::write(&summary_path, &summary_bytes)?;

        let manifest = Manifest {
            experiment: &self.name,
            code_version: env!("CARGO_PKG_VERSION"),
            rng: "chacha12 keyed by splitmix64(seed, task-index)",
            seed: self.seed,
            workers: self.workers,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            config_sha256,
            config: &self.config_text,
            outputs: vec![
                OutputEntry {
                    file: csv_path.file_name().unwrap().to_string_lossy().into_owned(),
                    sha256: sha256_hex(&csv_bytes),
                },
                OutputEntry {
                    file: summary_path
                        .file_name()
                        .unwrap()
                        .to_string_lossy()
                        .into_owned(),
                    sha256: sha256_hex(&summary_bytes),
                },
            ],
        };
        let manifest_path = self.out_dir.join(format!("{}.manifest.json", self.name));
        fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(vec![csv_path, summary_path, manifest_path])
    }
}
