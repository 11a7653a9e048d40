//! Run artifacts. Everything is assembled in memory and written only after
//! the command has finished, so a failed run leaves no files behind.

use std::fs;
use std::path::{Path, PathBuf};

use fbmlab::persistence::{Event, ExponentFit, PersistenceEstimate, PsiModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub fbmlab: String,
    pub fbmlab_cli: String,
    pub os: String,
    pub arch: String,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            fbmlab: fbmlab::VERSION.to_string(),
            fbmlab_cli: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// `run.json`. `config.toml` next to it reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub versions: Versions,
    pub generator_id: String,
    pub passed: bool,
    pub exit_code: i32,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

/// One line of `ladder.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub label: String,
    pub event: Event,
    pub psi_model: PsiModel,
    #[serde(rename = "T")]
    pub t: f64,
    pub psi: f64,
    pub level: f64,
    pub n_trials: usize,
    pub n_survive: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl LadderRow {
    pub fn new(label: &str, psi: PsiModel, e: &PersistenceEstimate) -> Self {
        LadderRow {
            label: label.to_string(),
            event: e.event,
            psi_model: psi,
            t: e.t,
            psi: psi.eval(e.t),
            level: e.level,
            n_trials: e.n_trials,
            n_survive: e.n_survive,
            p_hat: e.p_hat,
            ci_lo: e.ci95.0,
            ci_hi: e.ci95.1,
        }
    }
}

pub fn ladder_csv(rows: &[LadderRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Other(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

pub fn read_ladder_csv(path: &Path) -> Result<Vec<LadderRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<LadderRow>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub label: String,
    pub event: Event,
    pub psi_model: PsiModel,
    pub theta_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub n_used: usize,
    pub n_dropped: usize,
    pub chi2: f64,
}

impl FitRow {
    pub fn new(label: &str, event: Event, f: &ExponentFit) -> Self {
        FitRow {
            label: label.to_string(),
            event,
            psi_model: f.psi,
            theta_hat: f.theta_hat,
            stderr: f.stderr,
            intercept: f.intercept,
            n_used: f.n_used,
            n_dropped: f.dropped.len(),
            chi2: f.chi2,
        }
    }
}

pub fn fits_csv(rows: &[FitRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Other(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

pub fn json<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Other(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of one run, written together at the end.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Write through temporary names, then rename into place.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Other(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut staged = Vec::new();
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(io(&tmp, e));
            }
            staged.push((tmp, dir.join(name)));
        }
        let mut out = Vec::new();
        for (tmp, fin) in staged {
            fs::rename(&tmp, &fin).map_err(|e| io(&fin, e))?;
            out.push(fin);
        }
        Ok(out)
    }
}

/// Resolved config text and its hash.
pub fn config_artifact(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let text = cfg.to_toml()?;
    let hash = sha256_hex(text.as_bytes());
    Ok((text, hash))
}
