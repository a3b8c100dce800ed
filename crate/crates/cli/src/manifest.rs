//! Run manifest: every output directory carries exactly one `manifest.json`
//! listing each emitted file with its checksum, the command line, the
//! resolved configuration, and platform/timing metadata.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use critl3_core::config::ExperimentConfig;

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub artifact_version: String,
    pub platform: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

pub struct RunRecorder {
    out_dir: PathBuf,
    command: String,
    config: ExperimentConfig,
    started: Instant,
    outputs: Vec<PathBuf>,
    /// pass flags gathered from emitted reports: (name, pass)
    pub verdicts: Vec<(String, bool)>,
}

impl RunRecorder {
    pub fn new(out_dir: &Path, command: String, config: ExperimentConfig) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            command,
            config,
            started: Instant::now(),
            outputs: Vec::new(),
            verdicts: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> std::io::Result<PathBuf> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn track(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Writes an estimate report as pretty JSON and records its verdict.
    pub fn write_report(
        &mut self,
        name: &str,
        report: &critl3_core::EstimateReport,
    ) -> std::io::Result<()> {
        self.write_text(name, &report.to_json())?;
        self.verdicts.push((report.name.clone(), report.pass));
        Ok(())
    }

    pub fn record_verdict(&mut self, name: &str, pass: bool) {
        self.verdicts.push((name.to_string(), pass));
    }

    /// Writes the manifest and returns the process exit code: 0 iff every
    /// recorded verdict passed. Failing reports are named on stderr.
    pub fn finish(self) -> std::io::Result<i32> {
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for path in &self.outputs {
            let bytes = fs::read(path)?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let rel = path
                .strip_prefix(&self.out_dir)
                .unwrap_or(path)
                .to_string_lossy()
                .into_owned();
            outputs.push(OutputEntry {
                path: rel,
                sha256: hex::encode(hasher.finalize()),
                bytes: bytes.len() as u64,
            });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            platform: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        fs::write(
            self.out_dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;

        let mut code = 0;
        for (name, pass) in &self.verdicts {
            if !pass {
                eprintln!("FAIL: {name}");
                code = 1;
            }
        }
        for (name, pass) in &self.verdicts {
            println!("{}: {name}", if *pass { "pass" } else { "FAIL" });
        }
        Ok(code)
    }
}

/// Column documentation for an emitted CSV type.
pub fn csv_schema(file: &str, columns: &[(&str, &str)]) -> String {
    #[derive(Serialize)]
    struct Column<'a> {
        name: &'a str,
        description: &'a str,
    }
    #[derive(Serialize)]
    struct Schema<'a> {
        file: &'a str,
        columns: Vec<Column<'a>>,
    }
    serde_json::to_string_pretty(&Schema {
        file,
        columns: columns
            .iter()
            .map(|(name, description)| Column { name, description })
            .collect(),
    })
    .expect("schema serializes")
}
