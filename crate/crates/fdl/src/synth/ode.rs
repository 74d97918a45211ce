//! Adaptive Dormand-Prince 5(4) integration with dense output.
//!
//! The embedded 4th-order error estimate drives step-size control, and the
//! 5th-order continuous extension evaluates the solution at the requested
//! equidistant output times, so output density never constrains the step
//! sequence.

use crate::error::{Error, Result};

/// Default relative tolerance used by the curve generators.
pub const DEFAULT_RTOL: f64 = 1e-6;
/// Default absolute tolerance used by the curve generators.
pub const DEFAULT_ATOL: f64 = 1e-8;

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// 5th-order weights (also the 7th stage position: FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b5 - b4: error estimator weights over the 7 stages.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients for the order-4 continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Solution sampled at equidistant output times.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OdeSolution {
    /// One component of the state across all output times.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[idx]).collect()
    }
}

/// Integrate `y' = rhs(t, y)` over `t_span`, returning the solution at
/// `n_out` equidistant times (endpoints included).
///
/// Local error is controlled per component against `atol + rtol * |y|`.
/// A step size underflow aborts with the failing time.
pub fn integrate_ode<F>(
    mut rhs: F,
    init: &[f64],
    t_span: (f64, f64),
    n_out: usize,
    rtol: f64,
    atol: f64,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if n_out < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_out must be >= 2, got {n_out}"
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "empty time span [{t0}, {t1}]"
        )));
    }
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::InvalidArgument(
            "rtol and atol must be positive".into(),
        ));
    }
    let dim = init.len();
    let out_times: Vec<f64> = (0..n_out)
        .map(|i| {
            if i == n_out - 1 {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / (n_out - 1) as f64
            }
        })
        .collect();

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n_out);
    states.push(init.to_vec());
    let mut next_out = 1;

    let mut t = t0;
    let mut y = init.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_next = vec![0.0; dim];

    {
        let (k1, _) = k.split_at_mut(1);
        rhs(t, &y, &mut k1[0]);
    }
    let mut h = initial_step(&k[0], &y, t1 - t0, rtol, atol);
    let h_floor = (t1 - t0) * 1e-14;

    while t < t1 {
        if h < h_floor {
            return Err(Error::StepSizeUnderflow { t });
        }
        if t + h > t1 {
            h = t1 - t;
        }

        // Stages 2..7 (stage 1 derivative is already in k[0]).
        for (s, coeffs) in [
            (1, &A2[..]),
            (2, &A3[..]),
            (3, &A4[..]),
            (4, &A5[..]),
            (5, &A6[..]),
            (6, &B[..]),
        ] {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, &a) in coeffs.iter().enumerate() {
                    acc += a * k[j][i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            if s == 6 {
                y_next.copy_from_slice(&y_stage);
            }
            let ti = t + C[s] * h;
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            rhs(ti, &y_stage, &mut rest[0]);
        }

        // Scaled RMS error over components.
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, &w) in E.iter().enumerate() {
                e += w * k[j][i];
            }
            e *= h;
            let scale = atol + rtol * y[i].abs().max(y_next[i].abs());
            let r = e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if !err.is_finite() {
            h *= MIN_SCALE;
            continue;
        }
        if err <= 1.0 {
            // Accepted: emit dense output for every requested time in (t, t+h].
            while next_out < n_out && out_times[next_out] <= t + h + h_floor {
                let theta = ((out_times[next_out] - t) / h).clamp(0.0, 1.0);
                states.push(dense_eval(&y, &y_next, &k, h, theta));
                next_out += 1;
            }
            t += h;
            y.copy_from_slice(&y_next);
            // FSAL: last stage derivative becomes stage 1 of the next step.
            k.swap(0, 6);

            let scale = if err == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            };
            h *= scale;
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
        }
    }

    // Guard against an output time equal to t1 that slipped past the loop.
    while next_out < n_out {
        states.push(y.clone());
        next_out += 1;
    }

    Ok(OdeSolution {
        times: out_times,
        states,
    })
}

/// Order-4 continuous extension of the accepted step (Hairer's contd5).
fn dense_eval(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64) -> Vec<f64> {
    let dim = y0.len();
    let theta1 = 1.0 - theta;
    let mut out = vec![0.0; dim];
    for i in 0..dim {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        let r4 = ydiff - h * k[6][i] - bspl;
        let mut r5 = 0.0;
        for (j, &d) in D.iter().enumerate() {
            r5 += d * k[j][i];
        }
        r5 *= h;
        out[i] = y0[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
    }
    out
}

/// Conservative initial step from the scaled norms of y and f(t0, y).
fn initial_step(f0: &[f64], y0: &[f64], span: f64, rtol: f64, atol: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..y0.len() {
        let sc = atol + rtol * y0[i].abs();
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    let d0 = (d0 / y0.len() as f64).sqrt();
    let d1 = (d1 / y0.len() as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h0.min(span)
}
