//! Empirical samples of scalar random variables with provenance, and their
//! on-disk formats (single-column CSV, or a little-endian f64 stream with
//! an 8-byte count header).

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::SeedSpec;
use crate::{Error, Result};

/// Where a sample came from; enough to regenerate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Generator {
        descriptor: serde_json::Value,
        seed: SeedSpec,
    },
    ExternalFile {
        path: String,
    },
    Synthetic {
        label: String,
    },
}

/// A finite i.i.d. sample of a scalar random variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    provenance: Provenance,
}

impl Sample {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample values must be finite".into()));
        }
        Ok(Self { values, provenance })
    }

    pub fn synthetic(values: Vec<f64>, label: &str) -> Result<Self> {
        Self::new(values, Provenance::Synthetic { label: label.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Scale every value by `c` (norm homogeneity experiments).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| c * v).collect(),
            self.provenance.clone(),
        )
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)?;
        let mut values = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad sample value {t:?}: {e}")))?,
            );
        }
        Self::new(
            values,
            Provenance::ExternalFile {
                path: path.display().to_string(),
            },
        )
    }

    /// Binary format: u64 little-endian count header, then f64 LE values.
    pub fn write_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            f.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let mut f = BufReader::new(std::fs::File::open(path)?);
        let mut hdr = [0u8; 8];
        f.read_exact(&mut hdr)?;
        let n = u64::from_le_bytes(hdr) as usize;
        let mut values = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            f.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Self::new(
            values,
            Provenance::ExternalFile {
                path: path.display().to_string(),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(matches!(
            Sample::synthetic(vec![], "x"),
            Err(Error::EmptySample)
        ));
        assert!(Sample::synthetic(vec![1.0, f64::NAN], "x").is_err());
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = Sample::synthetic(vec![1.5, -2.25, 0.0, 1e-300], "t").unwrap();

        let csv = dir.path().join("s.csv");
        s.write_csv(&csv).unwrap();
        assert_eq!(Sample::read_csv(&csv).unwrap().values(), s.values());

        let bin = dir.path().join("s.f64");
        s.write_binary(&bin).unwrap();
        assert_eq!(Sample::read_binary(&bin).unwrap().values(), s.values());
    }
}
