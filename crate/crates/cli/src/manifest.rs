//! Machine-readable record of one run, written as `manifest.json` next to the
//! run's other outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition, e.g. `<= 1e-8`.
    pub limit: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub version: &'static str,
    pub parameters: serde_json::Value,
    pub output_dir: PathBuf,
    pub elapsed_s: f64,
    /// Every output file other than the manifest, relative to `output_dir`.
    pub files: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub scalars: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    /// Short human-readable results, printed by the CLI.
    pub report: Vec<String>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn write(&self) -> Result<PathBuf, CliError> {
        let path = self.output_dir.join(MANIFEST_FILE);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Collects files, checks and scalars while an experiment runs.
pub struct Recorder {
    dir: PathBuf,
    started: Instant,
    files: Vec<String>,
    checks: Vec<CheckResult>,
    scalars: BTreeMap<String, f64>,
    warnings: Vec<String>,
    report: Vec<String>,
}

impl Recorder {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            files: Vec::new(),
            checks: Vec::new(),
            scalars: BTreeMap::new(),
            warnings: Vec::new(),
            report: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write `name` through `body` and list it.
    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(f);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write a CSV table. Numbers should already be formatted.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// List a file some other writer produced, given relative to the run
    /// directory.
    pub fn listed(&mut self, relative: impl Into<String>) {
        self.files.push(relative.into());
    }

    /// Record `value <= limit`.
    pub fn check_le(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.check(name, value, format!("<= {limit:e}"), value <= limit);
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, limit: impl Into<String>, passed: bool) {
        self.checks.push(CheckResult { name: name.into(), value, limit: limit.into(), passed });
    }

    pub fn scalar(&mut self, key: impl Into<String>, value: f64) {
        self.scalars.insert(key.into(), value);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn report(&mut self, line: impl Into<String>) {
        self.report.push(line.into());
    }

    pub fn finish(self, config: &ExperimentConfig) -> Result<RunManifest, CliError> {
        let m = RunManifest {
            experiment: config.experiment,
            version: env!("CARGO_PKG_VERSION"),
            parameters: config.echo(),
            output_dir: self.dir,
            elapsed_s: self.started.elapsed().as_secs_f64(),
            files: self.files,
            checks: self.checks,
            scalars: self.scalars,
            warnings: self.warnings,
            report: self.report,
        };
        m.write()?;
        Ok(m)
    }
}

/// Shortest round-trip formatting, so equal values print identically.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
