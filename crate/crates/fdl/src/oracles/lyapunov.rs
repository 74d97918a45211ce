//! Largest-Lyapunov-exponent estimators.
//!
//! [`rosenstein_lle`] is the time-series estimator used to label training
//! curves: delay-embed the series, pair every point with its nearest
//! neighbor outside a temporal exclusion window, and fit the slope of the
//! mean log divergence of those pairs. [`benettin_lle`] is the independent
//! cross-check: it integrates the tangent dynamics alongside the trajectory
//! and averages the log stretch between renormalizations, which requires the
//! vector field itself rather than a measured series.

use crate::error::{Error, Result};
use crate::synth::ode::integrate_ode;
use crate::synth::LorenzSpec;

/// Parameters of the Rosenstein estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RosensteinConfig {
    /// Embedding dimension m (>= 2).
    pub embed_dim: usize,
    /// Embedding delay in samples (>= 1).
    pub delay: usize,
    /// Temporal exclusion window for the neighbor search, in samples.
    /// `None` estimates the mean period from the first zero crossing of the
    /// autocorrelation.
    pub exclusion: Option<usize>,
    /// Fraction of the divergence curve fitted for the slope (from step 0).
    pub fit_fraction: f64,
    /// Time between samples.
    pub sample_dt: f64,
}

impl RosensteinConfig {
    /// Defaults used for labeling: m = 3, delay 1, auto exclusion, fit over
    /// the first 20% of the divergence curve.
    pub fn for_dt(sample_dt: f64) -> Self {
        RosensteinConfig {
            embed_dim: 3,
            delay: 1,
            exclusion: None,
            fit_fraction: 0.2,
            sample_dt,
        }
    }
}

/// Estimate with a degenerate flag. Constant (or near-constant) series have
/// no meaningful divergence; they are flagged and reported as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LleEstimate {
    pub value: f64,
    pub degenerate: bool,
}

/// First zero crossing of the autocorrelation, used as a stand-in for the
/// mean period when no exclusion window is configured.
fn autocorrelation_zero_crossing(series: &[f64]) -> Option<usize> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|&s| (s - mean) * (s - mean)).sum();
    if var <= 0.0 {
        return None;
    }
    for lag in 1..n {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (series[i] - mean) * (series[i + lag] - mean);
        }
        if acc <= 0.0 {
            return Some(lag);
        }
    }
    None
}

/// Rosenstein largest Lyapunov exponent of a scalar series, per unit time.
pub fn rosenstein_lle(series: &[f64], cfg: &RosensteinConfig) -> Result<LleEstimate> {
    if cfg.embed_dim < 2 || cfg.delay < 1 {
        return Err(Error::InvalidArgument(
            "embedding requires m >= 2 and delay >= 1".into(),
        ));
    }
    if !(cfg.sample_dt > 0.0) {
        return Err(Error::InvalidArgument("sample_dt must be positive".into()));
    }
    let n = series.len();
    let span = (cfg.embed_dim - 1) * cfg.delay;
    let m_points = n.saturating_sub(span);
    if m_points < 12 {
        return Err(Error::SeriesTooShort(format!(
            "{n} samples leave {m_points} embedded points; need at least 12"
        )));
    }

    // Degenerate series: no dynamics to diverge.
    let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        return Ok(LleEstimate {
            value: 0.0,
            degenerate: true,
        });
    }

    let exclusion = cfg
        .exclusion
        .unwrap_or_else(|| {
            autocorrelation_zero_crossing(series).unwrap_or(n / 10)
        })
        .clamp(1, m_points / 4);

    let dist_sq = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for d in 0..cfg.embed_dim {
            let diff = series[i + d * cfg.delay] - series[j + d * cfg.delay];
            acc += diff * diff;
        }
        acc
    };

    // Nearest neighbor outside the exclusion window.
    let mut neighbor = vec![usize::MAX; m_points];
    for i in 0..m_points {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..m_points {
            if i.abs_diff(j) <= exclusion {
                continue;
            }
            let d = dist_sq(i, j);
            if d < best {
                best = d;
                best_j = j;
            }
        }
        neighbor[i] = best_j;
    }

    // Fit window: the first `fit_fraction` of the reachable divergence
    // horizon. The mean log divergence is taken over the fixed population of
    // pairs alive through the whole window, so the population does not
    // shrink across the fitted steps (a shrinking population biases the
    // slope whenever initial separations correlate with time).
    let horizon = m_points / 2;
    let fit_len = ((horizon as f64 * cfg.fit_fraction).ceil() as usize).clamp(4, horizon);
    let pairs: Vec<(usize, usize)> = (0..m_points)
        .filter_map(|i| {
            let j = neighbor[i];
            if j == usize::MAX {
                return None;
            }
            if i.max(j) + fit_len >= m_points {
                return None;
            }
            // Pairs that ever coincide have no log divergence.
            for k in 0..=fit_len {
                if dist_sq(i + k, j + k) <= 0.0 {
                    return None;
                }
            }
            Some((i, j))
        })
        .collect();
    if pairs.len() < 2 {
        return Err(Error::SeriesTooShort(
            "no neighbor pairs survive the divergence fit window".into(),
        ));
    }

    let divergence: Vec<f64> = (0..=fit_len)
        .map(|k| {
            let sum: f64 = pairs
                .iter()
                .map(|&(i, j)| 0.5 * dist_sq(i + k, j + k).ln())
                .sum();
            sum / pairs.len() as f64
        })
        .collect();
    let slope = ols_slope(&divergence);
    Ok(LleEstimate {
        value: slope / cfg.sample_dt,
        degenerate: false,
    })
}

/// Least-squares slope of `values` against their indices.
fn ols_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Benettin largest Lyapunov exponent: integrate the tangent vector with
/// periodic renormalization and average the log stretches.
///
/// `warmup` time is integrated (and renormalized) first without
/// accumulating, so the tangent vector can align with the dominant
/// direction before measurement starts.
pub fn benettin_lle<F, J>(
    rhs: F,
    jac_mul: J,
    init: &[f64],
    t_total: f64,
    renorm_interval: f64,
    warmup: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
    J: Fn(&[f64], &[f64], &mut [f64]),
{
    if !(t_total > 0.0) || !(renorm_interval > 0.0) {
        return Err(Error::InvalidArgument(
            "t_total and renorm_interval must be positive".into(),
        ));
    }
    let dim = init.len();
    let mut state = init.to_vec();
    let mut tangent = vec![1.0 / (dim as f64).sqrt(); dim];

    let augmented_rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, v) = y.split_at(dim);
        let (dx, dv) = dy.split_at_mut(dim);
        rhs(t, x, dx);
        jac_mul(x, v, dv);
    };

    let advance = |state: &mut Vec<f64>, tangent: &mut Vec<f64>, dt: f64| -> Result<f64> {
        let mut y = Vec::with_capacity(2 * dim);
        y.extend_from_slice(state);
        y.extend_from_slice(tangent);
        let sol = integrate_ode(&augmented_rhs, &y, (0.0, dt), 2, rtol, atol)?;
        let end = sol.states.last().unwrap();
        state.copy_from_slice(&end[..dim]);
        tangent.copy_from_slice(&end[dim..]);
        let norm = tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("tangent vector collapsed to zero".into()));
        }
        tangent.iter_mut().for_each(|v| *v /= norm);
        Ok(norm)
    };

    let mut t = 0.0;
    while t < warmup {
        let dt = renorm_interval.min(warmup - t);
        advance(&mut state, &mut tangent, dt)?;
        t += dt;
    }

    let mut log_sum = 0.0;
    let mut t = 0.0;
    while t < t_total {
        let dt = renorm_interval.min(t_total - t);
        log_sum += advance(&mut state, &mut tangent, dt)?.ln();
        t += dt;
    }
    Ok(log_sum / t_total)
}

/// Benettin estimate for a Lorenz system (analytic tangent dynamics).
pub fn benettin_lle_lorenz(
    spec: &LorenzSpec,
    t_total: f64,
    renorm_interval: f64,
) -> Result<f64> {
    let warmup = (0.05 * t_total).min(10.0);
    benettin_lle(
        |_t, y, dy| spec.rhs(y, dy),
        |x, v, out| spec.jacobian_mul(x, v, out),
        &[1.0, 1.0, 1.0],
        t_total,
        renorm_interval,
        warmup,
        1e-9,
        1e-11,
    )
}
