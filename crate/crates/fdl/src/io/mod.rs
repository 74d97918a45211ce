//! Persistence: dataset containers, PGM image export, drawing ingestion,
//! and the little-endian f32 payload helpers shared by the model store.

pub mod dataset;
pub mod drawings;
pub mod pgm;

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Write values as little-endian 32-bit floats.
pub fn write_f32le(path: &Path, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a little-endian 32-bit float payload, validating an exact expected
/// count when given.
pub fn read_f32le(path: &Path, expected: Option<usize>) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Data(format!(
            "{} has {} bytes, not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    let count = bytes.len() / 4;
    if let Some(want) = expected {
        if count != want {
            return Err(Error::Data(format!(
                "{} holds {count} floats, manifest expects {want}",
                path.display()
            )));
        }
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Advisory exclusive lock for container writers. The lock file is created
/// atomically and removed on drop.
pub struct DirLock {
    path: std::path::PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Data(format!(
                "container {} is locked by another writer",
                dir.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
