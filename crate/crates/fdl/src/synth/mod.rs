//! Seeded generators for every curve family, with ground-truth labels.
//!
//! Closed-form families (exponential, trig, Gaussian mixtures, the
//! classification families) are evaluated directly; the Lorenz and SIR
//! families are integrated with the adaptive Dormand-Prince solver in
//! [`ode`]. Each `Spec::sample` draws parameters from the distributions used
//! for the replication presets; `generate` is then fully deterministic, so a
//! per-record seed reproduces a record bitwise regardless of batch order.

pub mod ode;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveMeta, Family};
use crate::error::Result;
use crate::seed;
use ode::{integrate_ode, OdeSolution, DEFAULT_ATOL, DEFAULT_RTOL};

/// Default samples per curve for the n=100 families.
pub const DEFAULT_POINTS: usize = 100;
/// Default samples per curve for the peak-geometry family.
pub const GAUSS_POINTS: usize = 1000;

// Default domains. The source experiments never state x-ranges; these are
// chosen so the qualitative shapes (1-5 oscillations at omega in [0,3],
// visible convexity) come out right. They are fields, not constants.
pub const EXP_X_MAX: f64 = 5.0;
pub const TRIG_X_MAX: f64 = 12.0;
pub const MONOTONE_X_MAX: f64 = 5.0;
pub const GROWTH_X_MAX: f64 = 3.0;
pub const GAUSS_X_MAX: f64 = 50.0;

/// `y = exp(omega * x)` on `[0, x_max]`; label: `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSpec {
    pub omega: f64,
    pub x_max: f64,
    pub n: usize,
}

impl ExponentialSpec {
    /// Replication preset: omega uniform on [-1, 1].
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        ExponentialSpec {
            omega: rng.random_range(-1.0..=1.0),
            x_max: EXP_X_MAX,
            n,
        }
    }
}

pub fn gen_exponential(spec: &ExponentialSpec, record_seed: u64) -> Result<Curve> {
    let meta = CurveMeta::new(Family::Exponential, record_seed).with_param("omega", spec.omega);
    Curve::from_fn(0.0, spec.x_max, spec.n, |x| (spec.omega * x).exp(), meta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Sine,
    Cosine,
}

/// `y = sin(omega x)` or `cos(omega x)`; label: `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSpec {
    pub kind: TrigKind,
    pub omega: f64,
    pub x_max: f64,
    pub n: usize,
}

impl TrigSpec {
    /// Replication preset: omega uniform on [0, 3].
    pub fn sample<R: Rng>(rng: &mut R, kind: TrigKind, n: usize) -> Self {
        TrigSpec {
            kind,
            omega: rng.random_range(0.0..=3.0),
            x_max: TRIG_X_MAX,
            n,
        }
    }
}

pub fn gen_trig(spec: &TrigSpec, record_seed: u64) -> Result<Curve> {
    let family = match spec.kind {
        TrigKind::Sine => Family::Sine,
        TrigKind::Cosine => Family::Cosine,
    };
    let meta = CurveMeta::new(family, record_seed).with_param("omega", spec.omega);
    let omega = spec.omega;
    match spec.kind {
        TrigKind::Sine => Curve::from_fn(0.0, spec.x_max, spec.n, |x| (omega * x).sin(), meta),
        TrigKind::Cosine => Curve::from_fn(0.0, spec.x_max, spec.n, |x| (omega * x).cos(), meta),
    }
}

/// Two-kernel Gaussian mixture `y = sum_k H_k exp(-((x - P_k)/W_k)^2)` on
/// `[0, 50]`. Labels (peak count, max height, half-prominence width) come
/// from the peak oracle on the noise-free curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub heights: [f64; 2],
    pub widths: [f64; 2],
    pub positions: [f64; 2],
    pub n: usize,
}

impl GaussianMixtureSpec {
    /// Replication preset: H uniform on [0, 2200], W and P both
    /// `floor(50 U + 1)`. Positions may land outside [0, 50]; such kernels
    /// are kept (they are how zero-peak curves arise).
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        let mut height = || rng_range(rng, 0.0, 2200.0);
        let heights = [height(), height()];
        let unit = |rng: &mut R| -> f64 { (50.0 * rng.random_range(0.0..=1.0_f64) + 1.0).floor() };
        let widths = [unit(rng), unit(rng)];
        let positions = [unit(rng), unit(rng)];
        GaussianMixtureSpec {
            heights,
            widths,
            positions,
            n,
        }
    }
}

fn rng_range<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

pub fn gen_gaussian_mixture(spec: &GaussianMixtureSpec, record_seed: u64) -> Result<Curve> {
    let meta = CurveMeta::new(Family::GaussianMixture, record_seed)
        .with_param("h1", spec.heights[0])
        .with_param("h2", spec.heights[1])
        .with_param("w1", spec.widths[0])
        .with_param("w2", spec.widths[1])
        .with_param("p1", spec.positions[0])
        .with_param("p2", spec.positions[1]);
    let s = *spec;
    Curve::from_fn(
        0.0,
        GAUSS_X_MAX,
        spec.n,
        move |x| {
            let mut y = 0.0;
            for k in 0..2 {
                let u = (x - s.positions[k]) / s.widths[k];
                y += s.heights[k] * (-u * u).exp();
            }
            y
        },
        meta,
    )
}

/// `y = e^{w1 (x - w2)}` with `w1 = sign(U1 - 0.5)`; class: increasing vs
/// decreasing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSpec {
    pub increasing: bool,
    pub shift: f64,
    pub x_max: f64,
    pub n: usize,
}

impl MonotoneSpec {
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        MonotoneSpec {
            increasing: rng.random_range(0.0..1.0) >= 0.5,
            shift: 2.0 * rng.random_range(0.0..=1.0) + 2.5,
            x_max: MONOTONE_X_MAX,
            n,
        }
    }
}

pub fn gen_monotone(spec: &MonotoneSpec, record_seed: u64) -> Result<Curve> {
    let w1 = if spec.increasing { 1.0 } else { -1.0 };
    let w2 = spec.shift;
    let meta = CurveMeta::new(Family::Monotone, record_seed)
        .with_param("w1", w1)
        .with_param("w2", w2);
    Curve::from_fn(0.0, spec.x_max, spec.n, |x| (w1 * (x - w2)).exp(), meta)
}

/// `y = w1 (x - w2)^2`; class: convex vs concave.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSpec {
    pub convex: bool,
    pub shift: f64,
    pub x_max: f64,
    pub n: usize,
}

impl CurvatureSpec {
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        CurvatureSpec {
            convex: rng.random_range(0.0..1.0) >= 0.5,
            shift: 2.0 * rng.random_range(0.0..=1.0) + 2.5,
            x_max: MONOTONE_X_MAX,
            n,
        }
    }
}

pub fn gen_curvature(spec: &CurvatureSpec, record_seed: u64) -> Result<Curve> {
    let w1 = if spec.convex { 1.0 } else { -1.0 };
    let w2 = spec.shift;
    let meta = CurveMeta::new(Family::Curvature, record_seed)
        .with_param("w1", w1)
        .with_param("w2", w2);
    Curve::from_fn(0.0, spec.x_max, spec.n, |x| w1 * (x - w2) * (x - w2), meta)
}

/// `y = e^{c x}` (exponential) vs `y = x^c` (algebraic), `c = 3U + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub exponential: bool,
    pub rate: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GrowthSpec {
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        GrowthSpec {
            exponential: rng.random_range(0.0..1.0) >= 0.5,
            rate: 3.0 * rng.random_range(0.0..=1.0) + 1.0,
            x_max: GROWTH_X_MAX,
            n,
        }
    }
}

pub fn gen_growth(spec: &GrowthSpec, record_seed: u64) -> Result<Curve> {
    let c = spec.rate;
    let meta = CurveMeta::new(Family::Growth, record_seed)
        .with_param("c", c)
        .with_param("exponential", if spec.exponential { 1.0 } else { 0.0 });
    if spec.exponential {
        Curve::from_fn(0.0, spec.x_max, spec.n, |x| (c * x).exp(), meta)
    } else {
        Curve::from_fn(0.0, spec.x_max, spec.n, |x| x.powf(c), meta)
    }
}

/// Lorenz system `x' = alpha(y - x), y' = x(rho - z) - y, z' = xy - beta z`
/// from (1, 1, 1); the generated curve is the x component. The Lyapunov
/// label is attached by the caller from the Rosenstein oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzSpec {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub t_span: (f64, f64),
    pub n: usize,
}

impl LorenzSpec {
    /// Replication preset: alpha = 10 U1, beta = (8/3) U2, rho = 20 U3 on
    /// the unit interval.
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        LorenzSpec {
            alpha: 10.0 * rng.random_range(0.0..=1.0),
            beta: 8.0 / 3.0 * rng.random_range(0.0..=1.0),
            rho: 20.0 * rng.random_range(0.0..=1.0),
            t_span: (0.0, 1.0),
            n,
        }
    }

    pub fn classic() -> Self {
        LorenzSpec {
            alpha: 10.0,
            beta: 8.0 / 3.0,
            rho: 28.0,
            t_span: (0.0, 1.0),
            n: DEFAULT_POINTS,
        }
    }

    pub fn rhs(&self, state: &[f64], out: &mut [f64]) {
        out[0] = self.alpha * (state[1] - state[0]);
        out[1] = state[0] * (self.rho - state[2]) - state[1];
        out[2] = state[0] * state[1] - self.beta * state[2];
    }

    /// Jacobian-vector product at `state`, for the tangent dynamics.
    pub fn jacobian_mul(&self, state: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = self.alpha * (v[1] - v[0]);
        out[1] = (self.rho - state[2]) * v[0] - v[1] - state[0] * v[2];
        out[2] = state[1] * v[0] + state[0] * v[1] - self.beta * v[2];
    }
}

/// Full Lorenz trajectory at `spec.n` equidistant times.
pub fn lorenz_trajectory(spec: &LorenzSpec, rtol: f64, atol: f64) -> Result<OdeSolution> {
    integrate_ode(
        |_t, y, dy| spec.rhs(y, dy),
        &[1.0, 1.0, 1.0],
        spec.t_span,
        spec.n,
        rtol,
        atol,
    )
}

pub fn gen_lorenz(spec: &LorenzSpec, record_seed: u64) -> Result<Curve> {
    let sol = lorenz_trajectory(spec, DEFAULT_RTOL, DEFAULT_ATOL)?;
    let meta = CurveMeta::new(Family::Lorenz, record_seed)
        .with_param("alpha", spec.alpha)
        .with_param("beta", spec.beta)
        .with_param("rho", spec.rho);
    let xs_component = sol.component(0);
    Curve::new(sol.times, xs_component, meta)
}

/// SIR compartments as proportions: `S' = mu - beta S I - mu S`,
/// `I' = beta S I - (mu + gamma) I`, `R' = gamma I - mu R`, with
/// `S + I + R = 1`. The generated curve is the infected share in percent;
/// label: `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirSpec {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub t_span: (f64, f64),
    pub n: usize,
}

impl SirSpec {
    pub const INIT: [f64; 3] = [0.99, 0.01, 0.0];

    /// Replication preset: mu = 1/(365*50) and gamma = 1/28 per day, beta
    /// uniform on (0.01, 1), 50 days.
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        SirSpec::with_beta(rng.random_range(0.01..1.0), n)
    }

    pub fn with_beta(beta: f64, n: usize) -> Self {
        SirSpec {
            beta,
            mu: 1.0 / (365.0 * 50.0),
            gamma: 1.0 / 28.0,
            t_span: (0.0, 50.0),
            n,
        }
    }

    /// Basic reproduction number `beta / (mu + gamma)`.
    pub fn r0(&self) -> f64 {
        self.beta / (self.mu + self.gamma)
    }

    pub fn rhs(&self, state: &[f64], out: &mut [f64]) {
        let (s, i, r) = (state[0], state[1], state[2]);
        out[0] = self.mu - self.beta * s * i - self.mu * s;
        out[1] = self.beta * s * i - (self.mu + self.gamma) * i;
        out[2] = self.gamma * i - self.mu * r;
    }
}

/// Full SIR trajectory (proportions) at `spec.n` equidistant days.
pub fn sir_trajectory(spec: &SirSpec, rtol: f64, atol: f64) -> Result<OdeSolution> {
    integrate_ode(
        |_t, y, dy| spec.rhs(y, dy),
        &SirSpec::INIT,
        spec.t_span,
        spec.n,
        rtol,
        atol,
    )
}

/// Epidemic curve: infected share in percent (0-100) over time.
///
/// The percent scale keeps the sigma = 0.1 and sigma = 1 noise presets
/// commensurate with the curve amplitude, matching the noisy epidemic
/// curves the models are trained on.
pub fn gen_sir(spec: &SirSpec, record_seed: u64) -> Result<Curve> {
    let sol = sir_trajectory(spec, DEFAULT_RTOL, DEFAULT_ATOL)?;
    let meta = CurveMeta::new(Family::Sir, record_seed)
        .with_param("beta", spec.beta)
        .with_param("r0", spec.r0());
    let infected_pct = sol.states.iter().map(|s| 100.0 * s[1]).collect();
    Curve::new(sol.times, infected_pct, meta)
}

/// The eight regulatory sampling times (minutes) for dissolution profiles.
pub const DISSOLUTION_TIMES: [f64; 8] = [5.0, 10.0, 15.0, 20.0, 30.0, 60.0, 90.0, 120.0];

/// Centers of the two release-rate populations.
pub const DISSOLUTION_CENTERS: (f64, f64) = (0.01, 0.03);

/// Logistic dissolution profile `f(t) = 100 / (1 + exp(-c (t - 6)))` at the
/// eight regulatory times.
pub fn dissolution_profile(c: f64) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (i, &t) in DISSOLUTION_TIMES.iter().enumerate() {
        out[i] = 100.0 / (1.0 + (-c * (t - 6.0)).exp());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Similar,
    Dissimilar,
}

/// A reference/test profile pair with its generation labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DissolutionPair {
    pub reference: [f64; 8],
    pub test: [f64; 8],
    pub rate_ref: f64,
    pub rate_test: f64,
    pub kind: PairKind,
}

/// Generate a profile pair. Similar pairs draw both release rates from the
/// same population center (`c = center + 0.001 z`); dissimilar pairs draw
/// one rate from each center. Rates are floored at 1e-4 to stay positive.
pub fn gen_dissolution_pair(kind: PairKind, rng_seed: u64) -> DissolutionPair {
    let mut rng = seed::rng(rng_seed);
    let (c_lo, c_hi) = DISSOLUTION_CENTERS;
    let (center_ref, center_test) = match kind {
        PairKind::Similar => {
            let center = if rng.random_range(0.0..1.0) < 0.5 {
                c_lo
            } else {
                c_hi
            };
            (center, center)
        }
        PairKind::Dissimilar => (c_lo, c_hi),
    };
    let mut draw = |center: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        (center + 0.001 * z).max(1e-4)
    };
    let (c_ref, c_test) = (draw(center_ref), draw(center_test));
    DissolutionPair {
        reference: dissolution_profile(c_ref),
        test: dissolution_profile(c_test),
        rate_ref: c_ref,
        rate_test: c_test,
        kind,
    }
}

/// View an 8-point profile as a curve on the sample-index grid, ready for
/// the image encoder (which resamples it to the 28-point grid).
pub fn profile_to_curve(profile: &[f64; 8], record_seed: u64) -> Curve {
    let xs = (0..8).map(|i| i as f64).collect();
    Curve::new(
        xs,
        profile.to_vec(),
        CurveMeta::new(Family::Dissolution, record_seed),
    )
    .expect("8-point index grid is valid")
}
