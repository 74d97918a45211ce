//! On-disk dataset containers.
//!
//! A container is a directory holding `manifest.json` plus flat
//! little-endian f32 payloads: `curves.f32le` (record-major, `points` floats
//! per curve), `labels.f32le` (one float per curve), and optionally
//! `images.f32le` (784 floats per encoded image). The manifest records the
//! seeds and generation parameters, so a container can be regenerated and
//! compared byte for byte; payload sizes are validated against the manifest
//! on read.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{equidistant_grid, Curve, CurveMeta, Family, NormalizationMode};
use crate::error::{Error, Result};
use crate::seed;

use super::{read_f32le, write_f32le, DirLock};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub family: Family,
    /// What the label means: "omega", "width", "height", "count", "class",
    /// "lle", "beta".
    pub label_kind: String,
    pub count: usize,
    pub points: usize,
    pub x0: f64,
    pub x1: f64,
    pub sigma: f64,
    pub master_seed: u64,
    /// Encoding mode this dataset is meant to be used with.
    pub normalization: NormalizationMode,
    pub has_images: bool,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "manifest version {} unsupported (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.points < 2 || !(self.x1 > self.x0) {
            return Err(Error::Data("manifest grid is degenerate".into()));
        }
        self.normalization.validate().map_err(|e| {
            Error::Data(format!("manifest normalization invalid: {e}"))
        })
    }
}

/// In-memory view of a container.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub curves: Vec<Curve>,
    pub labels: Vec<f64>,
    /// Flattened 28x28 images, when materialized.
    pub images: Option<Vec<Vec<f64>>>,
}

/// Write a container; the directory is created if needed and locked for the
/// duration of the write.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    let m = &dataset.manifest;
    m.validate()?;
    if dataset.curves.len() != m.count || dataset.labels.len() != m.count {
        return Err(Error::Data(format!(
            "manifest count {} does not match payload ({} curves, {} labels)",
            m.count,
            dataset.curves.len(),
            dataset.labels.len()
        )));
    }
    fs::create_dir_all(dir)?;
    let _lock = DirLock::acquire(dir)?;

    let mut flat = Vec::with_capacity(m.count * m.points);
    for curve in &dataset.curves {
        if curve.len() != m.points {
            return Err(Error::Data(format!(
                "curve has {} points, manifest says {}",
                curve.len(),
                m.points
            )));
        }
        flat.extend_from_slice(curve.ys());
    }
    write_f32le(&dir.join("curves.f32le"), &flat)?;
    write_f32le(&dir.join("labels.f32le"), &dataset.labels)?;
    match &dataset.images {
        Some(images) => {
            if images.len() != m.count || !m.has_images {
                return Err(Error::Data("image payload inconsistent with manifest".into()));
            }
            let mut flat = Vec::with_capacity(m.count * 784);
            for img in images {
                if img.len() != 784 {
                    return Err(Error::Data("image is not 28x28".into()));
                }
                flat.extend_from_slice(img);
            }
            write_f32le(&dir.join("images.f32le"), &flat)?;
        }
        None => {
            if m.has_images {
                return Err(Error::Data("manifest promises images but none given".into()));
            }
        }
    }
    let json = serde_json::to_string_pretty(m)?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Read a container, validating payload sizes against the manifest.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.json");
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    manifest.validate()?;

    let flat = read_f32le(
        &dir.join("curves.f32le"),
        Some(manifest.count * manifest.points),
    )?;
    let labels = read_f32le(&dir.join("labels.f32le"), Some(manifest.count))?;
    let xs = equidistant_grid(manifest.x0, manifest.x1, manifest.points);
    let mut curves = Vec::with_capacity(manifest.count);
    for (i, chunk) in flat.chunks_exact(manifest.points).enumerate() {
        let mut meta = CurveMeta::new(manifest.family, seed::mix(manifest.master_seed, i as u64));
        meta.sigma = manifest.sigma;
        curves.push(Curve::new(xs.clone(), chunk.to_vec(), meta)?);
    }
    let images = if manifest.has_images {
        let flat = read_f32le(&dir.join("images.f32le"), Some(manifest.count * 784))?;
        Some(flat.chunks_exact(784).map(|c| c.to_vec()).collect())
    } else {
        None
    };
    Ok(Dataset {
        manifest,
        curves,
        labels,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_exponential, ExponentialSpec};

    fn sample_dataset(count: usize) -> Dataset {
        let curves: Vec<Curve> = (0..count)
            .map(|i| {
                let spec = ExponentialSpec {
                    omega: -1.0 + 2.0 * i as f64 / count as f64,
                    x_max: 10.0,
                    n: 50,
                };
                gen_exponential(&spec, seed::mix(7, i as u64)).unwrap()
            })
            .collect();
        let labels = curves.iter().map(|c| c.meta.params["omega"]).collect();
        Dataset {
            manifest: DatasetManifest {
                version: MANIFEST_VERSION,
                family: Family::Exponential,
                label_kind: "omega".into(),
                count,
                points: 50,
                x0: 0.0,
                x1: 10.0,
                sigma: 0.0,
                master_seed: 7,
                normalization: NormalizationMode::Local,
                has_images: false,
            },
            curves,
            labels,
            images: None,
        }
    }

    #[test]
    fn round_trip_is_bitwise_lossless() {
        let tmp = tempfile::tempdir().unwrap();
        let d1 = tmp.path().join("a");
        let d2 = tmp.path().join("b");
        let ds = sample_dataset(20);
        write_dataset(&d1, &ds).unwrap();
        let back = read_dataset(&d1).unwrap();
        write_dataset(&d2, &back).unwrap();
        for file in ["manifest.json", "curves.f32le", "labels.f32le"] {
            let a = fs::read(d1.join(file)).unwrap();
            let b = fs::read(d2.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
    }

    #[test]
    fn truncated_labels_file_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ds");
        write_dataset(&dir, &sample_dataset(10)).unwrap();
        let labels = dir.join("labels.f32le");
        let bytes = fs::read(&labels).unwrap();
        fs::write(&labels, &bytes[..bytes.len() - 4]).unwrap();
        let err = read_dataset(&dir).unwrap_err();
        assert!(err.to_string().contains("manifest expects"));
    }

    #[test]
    fn malformed_manifest_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ds");
        write_dataset(&dir, &sample_dataset(5)).unwrap();
        fs::write(dir.join("manifest.json"), "{not json").unwrap();
        assert!(read_dataset(&dir).is_err());
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ds");
        let mut ds = sample_dataset(5);
        write_dataset(&dir, &ds).unwrap();
        ds.manifest.version = 99;
        let json = serde_json::to_string_pretty(&ds.manifest).unwrap();
        fs::write(dir.join("manifest.json"), json).unwrap();
        let err = read_dataset(&dir).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
