//! Ensemble export: a raw column-major little-endian f64 matrix plus a JSON
//! sidecar, and CSV for small grids.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Grid, PathEnsemble};
use crate::error::{Error, Result};
use crate::KernelSpec;

pub const LAYOUT: &str = "column-major f64 little-endian";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSidecar {
    pub kernel: KernelSpec,
    pub grid: Grid,
    pub n_trials: usize,
    pub n_points: usize,
    pub seed: u64,
    pub generator_id: String,
    pub layout: String,
    pub data_file: String,
}

fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl PathEnsemble {
    /// Write `path` (binary) and `path.json` (sidecar). Returns the sidecar path.
    pub fn write_binary(&self, path: &Path) -> Result<PathBuf> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.encode_binary(&mut w)?;
        w.flush()?;
        let name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let sp = sidecar_path(path);
        fs::write(&sp, serde_json::to_string_pretty(&self.sidecar(&name))?)?;
        Ok(sp)
    }

    /// The values, column by column.
    pub fn encode_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let (nt, np) = (self.n_trials, self.n_points());
        for j in 0..np {
            for i in 0..nt {
                w.write_all(&self.values[i * np + j].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn sidecar(&self, data_file: &str) -> EnsembleSidecar {
        EnsembleSidecar {
            kernel: self.kernel,
            grid: self.grid.clone(),
            n_trials: self.n_trials,
            n_points: self.n_points(),
            seed: self.seed,
            generator_id: self.generator_id.clone(),
            layout: LAYOUT.to_string(),
            data_file: data_file.to_string(),
        }
    }

    /// Inverse of [`PathEnsemble::write_binary`].
    pub fn read_binary(path: &Path) -> Result<Self> {
        let side: EnsembleSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        if side.layout != LAYOUT {
            return Err(Error::Format(format!("unsupported layout {:?}", side.layout)));
        }
        if side.n_points != side.grid.len() {
            return Err(Error::Format("sidecar n_points disagrees with its grid".into()));
        }
        let (nt, np) = (side.n_trials, side.n_points);
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() != nt * np * 8 {
            return Err(Error::Format(format!("expected {} bytes, found {}", nt * np * 8, bytes.len())));
        }
        let mut values = vec![0.0; nt * np];
        for (k, chunk) in bytes.chunks_exact(8).enumerate() {
            let (j, i) = (k / nt, k % nt);
            values[i * np + j] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        Ok(PathEnsemble {
            kernel: side.kernel,
            grid: side.grid,
            n_trials: nt,
            values,
            seed: side.seed,
            generator_id: side.generator_id,
        })
    }

    /// One row per trial; the header names each grid point by its coordinates.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.encode_csv(fs::File::create(path)?)
    }

    pub fn encode_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["trial".to_string()];
        match &self.grid {
            Grid::OneD(g) => header.extend(g.points().iter().map(|p| format!("t={p}"))),
            Grid::TwoD(g) => header.extend(g.points().iter().map(|p| format!("s=({};{})", p[0], p[1]))),
        }
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for t in 0..self.n_trials {
            let rec = std::iter::once(t.to_string()).chain(self.row(t).iter().map(|v| v.to_string()));
            w.write_record(rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{chol_sample, fbs_sample_kron, Grid1D};
    use crate::Hurst;

    #[test]
    fn binary_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::OneD(Grid1D::uniform(0.1, 3.0, 7).unwrap());
        let ens = chol_sample(&KernelSpec::fbm(Hurst::new(0.35).unwrap()), &g, 33, 5).unwrap();
        let p = dir.path().join("ens.bin");
        let side = ens.write_binary(&p).unwrap();
        assert!(side.exists());
        let back = PathEnsemble::read_binary(&p).unwrap();
        assert_eq!(back, ens);
        assert!(back.values.iter().zip(&ens.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sheet_round_trip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let gx = Grid1D::new(vec![0.5, 1.0]).unwrap();
        let ens = fbs_sample_kron(Hurst::new(0.6).unwrap(), &gx, &gx, 4, 1).unwrap();
        let p = dir.path().join("sheet.bin");
        ens.write_binary(&p).unwrap();
        assert_eq!(PathEnsemble::read_binary(&p).unwrap(), ens);
        let c = dir.path().join("sheet.csv");
        ens.write_csv(&c).unwrap();
        let text = fs::read_to_string(c).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("trial,s=(0.5;0.5)"));
    }

    #[test]
    fn truncated_data_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::OneD(Grid1D::uniform(0.1, 1.0, 3).unwrap());
        let ens = chol_sample(&KernelSpec::fbm(Hurst::new(0.5).unwrap()), &g, 4, 5).unwrap();
        let p = dir.path().join("e.bin");
        ens.write_binary(&p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(PathEnsemble::read_binary(&p), Err(Error::Format(_))));
    }
}
