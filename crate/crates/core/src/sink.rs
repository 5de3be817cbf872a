//! Write-through storage of accepted solutions.
//!
//! The binary stream holds one record per step, each `M` little-endian
//! `f64` values, with no framing. A text sidecar `<stream>.hdr` lists the
//! run parameters as `key = value` lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Receives each accepted solution vector once, in step order.
pub trait SolutionSink {
    fn write_step(&mut self, n: usize, values: &[f64]) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Run parameters recorded next to a solution stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkHeader {
    pub intervals: usize,
    pub dim: usize,
    pub nu: f64,
    pub final_time: f64,
    pub r: Option<usize>,
    pub eta: Option<f64>,
    pub branching: Option<usize>,
    pub depth: Option<usize>,
}

impl SinkHeader {
    pub fn render(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
        }
        format!(
            "N = {}\nM = {}\nnu = {}\nT = {}\nr = {}\neta = {}\nQ = {}\nG = {}\nformat = f64-le\n",
            self.intervals,
            self.dim,
            self.nu,
            self.final_time,
            opt(&self.r),
            opt(&self.eta),
            opt(&self.branching),
            opt(&self.depth),
        )
    }
}

/// Raw little-endian stream on disk.
#[derive(Debug)]
pub struct BinarySink {
    path: PathBuf,
    out: BufWriter<File>,
    dim: usize,
    written: usize,
}

impl BinarySink {
    /// Creates `path` and its header sidecar `path.hdr`.
    pub fn create(path: impl AsRef<Path>, header: &SinkHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        std::fs::write(header_path(&path), header.render())?;
        let out = BufWriter::new(File::create(&path)?);
        Ok(Self {
            path,
            out,
            dim: header.dim,
            written: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> usize {
        self.written
    }
}

/// Sidecar location for a stream.
pub fn header_path(stream: &Path) -> PathBuf {
    let mut name = stream.as_os_str().to_owned();
    name.push(".hdr");
    PathBuf::from(name)
}

impl SolutionSink for BinarySink {
    fn write_step(&mut self, n: usize, values: &[f64]) -> Result<()> {
        if n != self.written + 1 || values.len() != self.dim {
            return Err(Error::InvalidState(format!(
                "record {n} of length {} does not follow record {} of length {}",
                values.len(),
                self.written,
                self.dim
            )));
        }
        for v in values {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.written += 1;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// In-memory sink, mainly for tests.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub records: Vec<Vec<f64>>,
}

impl SolutionSink for MemorySink {
    fn write_step(&mut self, _n: usize, values: &[f64]) -> Result<()> {
        self.records.push(values.to_vec());
        Ok(())
    }
}

/// Reads a stream written by [`BinarySink`] back as records of length `dim`.
pub fn read_stream(path: impl AsRef<Path>, dim: usize) -> Result<Vec<Vec<f64>>> {
    let bytes = std::fs::read(path)?;
    let record = 8 * dim;
    if dim == 0 || bytes.len() % record != 0 {
        return Err(Error::InvalidState(format!(
            "stream of {} bytes is not a whole number of {dim}-value records",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(record)
        .map(|rec| {
            rec.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let header = SinkHeader {
            intervals: 2,
            dim: 3,
            nu: 0.5,
            final_time: 6.0,
            r: Some(5),
            eta: None,
            branching: Some(2),
            depth: Some(1),
        };
        let mut sink = BinarySink::create(&path, &header).unwrap();
        sink.write_step(1, &[1.0, -2.0, 3.5]).unwrap();
        sink.write_step(2, &[0.0, 1e-300, f64::MAX]).unwrap();
        assert!(sink.write_step(4, &[0.0; 3]).is_err());
        sink.finish().unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 48);
        let back = read_stream(&path, 3).unwrap();
        assert_eq!(back, vec![vec![1.0, -2.0, 3.5], vec![0.0, 1e-300, f64::MAX]]);
        let text = std::fs::read_to_string(header_path(&path)).unwrap();
        assert!(text.contains("N = 2\n") && text.contains("eta = none\n"));
    }
}
