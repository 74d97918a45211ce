//! Curve representation, Min-Max normalization, resampling, and noise.
//!
//! A [`Curve`] is a real-valued function sampled on an equidistant grid.
//! Operations here are pure: they return new curves and never mutate their
//! input, so they are safe to call from any number of threads.
//!
//! Pipeline order is fixed throughout the crate: noise is added to the raw
//! curve first, then the curve is Min-Max normalized, then resampled to the
//! encoder grid.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Relative tolerance for the equidistant-grid invariant.
const STEP_REL_TOL: f64 = 1e-9;

/// Curve family tag carried in metadata.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Sine,
    Cosine,
    GaussianMixture,
    Monotone,
    Curvature,
    Growth,
    Lorenz,
    Sir,
    Dissolution,
    Drawing,
    Unknown,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Sine => "sine",
            Family::Cosine => "cosine",
            Family::GaussianMixture => "gaussian_mixture",
            Family::Monotone => "monotone",
            Family::Curvature => "curvature",
            Family::Growth => "growth",
            Family::Lorenz => "lorenz",
            Family::Sir => "sir",
            Family::Dissolution => "dissolution",
            Family::Drawing => "drawing",
            Family::Unknown => "unknown",
        }
    }
}

/// Metadata attached to a curve: family, true parameters, noise level, seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl CurveMeta {
    pub fn new(family: Family, seed: u64) -> Self {
        CurveMeta {
            family,
            params: BTreeMap::new(),
            sigma: 0.0,
            seed,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn unknown() -> Self {
        CurveMeta::new(Family::Unknown, 0)
    }
}

/// An equidistantly sampled real-valued function with metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    pub meta: CurveMeta,
}

impl Curve {
    /// Build a curve, validating the grid invariants: at least two samples,
    /// `xs`/`ys` of equal length, and `xs` strictly increasing with constant
    /// step (relative deviation at most 1e-9).
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidCurve(format!(
                "xs has {} samples but ys has {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidCurve("need at least 2 samples".into()));
        }
        let n = xs.len();
        let base_step = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        if !(base_step > 0.0) || !base_step.is_finite() {
            return Err(Error::InvalidCurve("xs must be strictly increasing".into()));
        }
        for i in 0..n - 1 {
            let step = xs[i + 1] - xs[i];
            if !(step > 0.0) || ((step - base_step) / base_step).abs() > STEP_REL_TOL {
                return Err(Error::InvalidCurve(format!(
                    "non-equidistant grid at index {i}: step {step}, expected {base_step}"
                )));
            }
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidCurve("non-finite ordinate".into()));
        }
        Ok(Curve { xs, ys, meta })
    }

    /// Sample `f` at `n` equidistant abscissae on `[x0, x1]`.
    pub fn from_fn<F: Fn(f64) -> f64>(
        x0: f64,
        x1: f64,
        n: usize,
        f: F,
        meta: CurveMeta,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if !(x1 > x0) {
            return Err(Error::InvalidArgument(format!(
                "empty domain [{x0}, {x1}]"
            )));
        }
        let xs = equidistant_grid(x0, x1, n);
        let ys = xs.iter().map(|&x| f(x)).collect();
        Curve::new(xs, ys, meta)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least 2 samples
    }

    /// Grid step.
    pub fn step(&self) -> f64 {
        (self.xs[self.xs.len() - 1] - self.xs[0]) / (self.xs.len() - 1) as f64
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn y_min(&self) -> f64 {
        self.ys.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn y_max(&self) -> f64 {
        self.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replace the ordinates, keeping grid and metadata.
    pub(crate) fn with_ys(&self, ys: Vec<f64>) -> Curve {
        debug_assert_eq!(ys.len(), self.xs.len());
        Curve {
            xs: self.xs.clone(),
            ys,
            meta: self.meta.clone(),
        }
    }
}

/// `n` equidistant points on `[x0, x1]`, endpoints exact.
pub fn equidistant_grid(x0: f64, x1: f64, n: usize) -> Vec<f64> {
    let step = (x1 - x0) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                x1
            } else {
                x0 + i as f64 * step
            }
        })
        .collect()
}

/// Min-Max normalization mode.
///
/// `Local` rescales by the curve's own extrema; `Global` rescales by corpus
/// extrema (and clamps, since test curves may exceed the training range).
/// `Global` requires `max > min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizationMode {
    Local,
    Global { min: f64, max: f64 },
}

impl NormalizationMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            NormalizationMode::Local => Ok(()),
            NormalizationMode::Global { min, max } => {
                if !(max > min) || !min.is_finite() || !max.is_finite() {
                    Err(Error::InvalidArgument(format!(
                        "global normalization requires finite max > min, got [{min}, {max}]"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Additive Gaussian noise: `y' = y + sigma * z`, `z ~ N(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(NoiseSpec { sigma })
    }

    pub const fn none() -> Self {
        NoiseSpec { sigma: 0.0 }
    }
}

/// Min-Max normalize a curve.
///
/// Local mode maps the ordinates affinely so min = 0 and max = 1; a constant
/// curve maps to all 0.5 (the degenerate rule keeps the image encoder well
/// defined: its distance matrix is all zero, a neutral image). Global mode
/// maps through the corpus bounds and clamps to [0, 1].
pub fn minmax_normalize(curve: &Curve, mode: NormalizationMode) -> Curve {
    match mode {
        NormalizationMode::Local => {
            let lo = curve.y_min();
            let hi = curve.y_max();
            if hi == lo {
                curve.with_ys(vec![0.5; curve.len()])
            } else {
                let scale = 1.0 / (hi - lo);
                curve.with_ys(curve.ys.iter().map(|&y| (y - lo) * scale).collect())
            }
        }
        NormalizationMode::Global { min, max } => {
            assert!(max > min, "global normalization bounds must satisfy max > min");
            let scale = 1.0 / (max - min);
            curve.with_ys(
                curve
                    .ys
                    .iter()
                    .map(|&y| ((y - min) * scale).clamp(0.0, 1.0))
                    .collect(),
            )
        }
    }
}

/// Add seeded Gaussian noise to the raw ordinates.
///
/// `sigma = 0` returns the curve unchanged. The same seed always produces
/// bitwise-identical output.
pub fn add_noise(curve: &Curve, spec: NoiseSpec, rng_seed: u64) -> Curve {
    if spec.sigma == 0.0 {
        return curve.clone();
    }
    let mut rng = seed::rng(rng_seed);
    let ys = curve
        .ys
        .iter()
        .map(|&y| {
            let z: f64 = StandardNormal.sample(&mut rng);
            y + spec.sigma * z
        })
        .collect();
    let mut out = curve.with_ys(ys);
    out.meta.sigma = spec.sigma;
    out
}

/// Linearly interpolate the curve at `m` equidistant abscissae spanning the
/// original domain. Endpoint values are preserved exactly.
pub fn resample(curve: &Curve, m: usize) -> Result<Curve> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "resample target must be >= 2, got {m}"
        )));
    }
    let n = curve.len();
    let x0 = curve.x_min();
    let x1 = curve.x_max();
    let src_step = curve.step();
    let xs = equidistant_grid(x0, x1, m);
    let mut ys = Vec::with_capacity(m);
    for (i, &x) in xs.iter().enumerate() {
        if i == 0 {
            ys.push(curve.ys[0]);
        } else if i == m - 1 {
            ys.push(curve.ys[n - 1]);
        } else {
            let j = (((x - x0) / src_step) as usize).min(n - 2);
            let t = (x - curve.xs[j]) / (curve.xs[j + 1] - curve.xs[j]);
            ys.push(curve.ys[j] + t * (curve.ys[j + 1] - curve.ys[j]));
        }
    }
    Curve::new(xs, ys, curve.meta.clone())
}
