//! Functional data learning toolkit.
//!
//! 1-D curves are turned into 28x28 grayscale images built from the signed
//! distance matrix `d_ij = f(x_i) - f(x_j)`, and small convolutional networks
//! are trained on those images for parameter regression (exponential rates,
//! trigonometric frequencies, peak geometry, Lyapunov exponents, epidemic
//! transmission rates), curve classification (monotonicity, curvature, growth
//! type, peak count), and Siamese similarity detection (drug dissolution
//! profiles). Classical estimators (Rosenstein/Benettin Lyapunov, prominence
//! peak metrics, the f1/f2 dissolution factors) provide ground-truth labels
//! and baselines.
//!
//! Everything is seeded and deterministic: the same master seed reproduces
//! datasets, trained weights, and evaluation reports byte for byte.
//!
//! Start with the runnable examples (`cargo run --release -p fdl --example
//! exp_rate`), or use the `fdl` binary for the generate/train/eval/bench
//! workflow on disk.

pub mod curve;
pub mod encode;
pub mod error;
pub mod io;
pub mod models;
pub mod nn;
pub mod oracles;
pub mod seed;
pub mod stats;
pub mod synth;

pub use curve::{Curve, CurveMeta, Family, NoiseSpec, NormalizationMode};
pub use encode::{encode, encode_batch, EncodedImage, IMAGE_SIZE};
pub use error::{Error, Result};
