//! Evaluation statistics: Pearson correlation, the predicted-vs-true
//! regression line with hypothesis tests, confusion matrices, and benchmark
//! bookkeeping.
//!
//! The regression line is fitted as `predicted = intercept + slope * true`.
//! The reported p-values test H0: intercept = 0 and H0: slope = 1 (two-sided
//! Student-t with n - 2 degrees of freedom); a perfect predictor should sit
//! on the diagonal, so the slope null is 1, not 0. The t CDF is evaluated
//! through the regularized incomplete beta function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple regression of predictions on true values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    /// Pearson correlation between true values and predictions.
    pub r: f64,
    pub intercept: f64,
    /// Two-sided p-value for H0: intercept = 0.
    pub intercept_p: f64,
    pub slope: f64,
    /// Two-sided p-value for H0: slope = 1.
    pub slope_p: f64,
    pub n: usize,
    /// Set when the residuals are (numerically) zero; the t statistics are
    /// then unbounded and the p-values are reported as 0.
    pub degenerate: bool,
}

/// Fit `predicted = a + b * true` and test the diagonal-line hypotheses.
pub fn regression_report(true_vals: &[f64], predicted: &[f64]) -> Result<RegressionReport> {
    let n = true_vals.len();
    if n != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} true vs {} predicted",
            n,
            predicted.len()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let x_mean = true_vals.iter().sum::<f64>() / nf;
    let y_mean = predicted.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in true_vals.iter().zip(predicted) {
        sxx += (x - x_mean) * (x - x_mean);
        syy += (y - y_mean) * (y - y_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx <= 0.0 {
        return Err(Error::Degenerate(
            "true values have zero variance".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let r = if syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    };

    let df = nf - 2.0;
    let sse: f64 = true_vals
        .iter()
        .zip(predicted)
        .map(|(&x, &y)| {
            let res = y - (intercept + slope * x);
            res * res
        })
        .sum();

    // Zero residual: the fit is exact and the t statistics blow up.
    let scale = syy.max(1.0);
    if sse <= 1e-24 * scale {
        return Ok(RegressionReport {
            r,
            intercept,
            intercept_p: 0.0,
            slope,
            slope_p: 0.0,
            n,
            degenerate: true,
        });
    }

    let mse = sse / df;
    let se_slope = (mse / sxx).sqrt();
    let se_intercept = (mse * (1.0 / nf + x_mean * x_mean / sxx)).sqrt();
    let t_slope = (slope - 1.0) / se_slope;
    let t_intercept = intercept / se_intercept;
    Ok(RegressionReport {
        r,
        intercept,
        intercept_p: student_t_two_sided_p(t_intercept, df),
        slope,
        slope_p: student_t_two_sided_p(t_slope, df),
        n,
        degenerate: false,
    })
}

/// Confusion matrix over classes `0..num_classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub num_classes: usize,
    /// `counts[t][p]`: samples of true class `t` predicted as `p`.
    pub counts: Vec<Vec<usize>>,
    pub accuracy: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(
    true_labels: &[usize],
    predicted_labels: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} true vs {} predicted",
            true_labels.len(),
            predicted_labels.len()
        )));
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::Data(format!(
                "label outside declared class set 0..{num_classes}: true {t}, predicted {p}"
            )));
        }
        counts[t][p] += 1;
    }
    let total: usize = true_labels.len();
    let trace: usize = (0..num_classes).map(|i| counts[i][i]).sum();
    let accuracy = if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    };
    Ok(ConfusionMatrix {
        num_classes,
        counts,
        accuracy,
    })
}

/// Wall-clock measurement for one batch pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: String,
    pub seconds: f64,
    pub items: usize,
}

impl BenchResult {
    pub fn items_per_second(&self) -> f64 {
        self.items as f64 / self.seconds
    }
}

// ---------------------------------------------------------------------------
// Student-t via the regularized incomplete beta function.
// ---------------------------------------------------------------------------

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom:
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function `I_x(a, b)` by the Lentz continued
/// fraction, accurate to about 1e-12 over the statistical range used here.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Log gamma (Lanczos, g = 7, 9 terms); relative accuracy around 1e-13.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_degenerate_diagonal() {
        let t = [0.1, 0.5, 0.9, 1.4, 2.0];
        let rep = regression_report(&t, &t).unwrap();
        assert!((rep.r - 1.0).abs() < 1e-12);
        assert!((rep.slope - 1.0).abs() < 1e-12);
        assert!(rep.intercept.abs() < 1e-12);
        assert!(rep.degenerate);
    }

    #[test]
    fn sign_flip_gives_negative_correlation() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let p: Vec<f64> = t.iter().map(|&x| -x).collect();
        let rep = regression_report(&t, &p).unwrap();
        assert!((rep.r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn five_point_fit_matches_hand_computed_solution() {
        // Frozen against an independent least-squares computation.
        let t = [1.0, 2.0, 3.0, 4.0, 5.0];
        let p = [1.05, 2.10, 2.85, 4.20, 4.90];
        let rep = regression_report(&t, &p).unwrap();
        assert!((rep.r - 0.995_912_331_219_863_1).abs() < 1e-12);
        assert!((rep.slope - 0.98).abs() < 1e-12);
        assert!((rep.intercept - 0.08).abs() < 1e-12);
        assert!((rep.slope_p - 0.722_749_202_183_226_6).abs() < 1e-9);
        assert!((rep.intercept_p - 0.670_380_761_207_754_5).abs() < 1e-9);
        assert!(!rep.degenerate);
    }

    #[test]
    fn zero_variance_truth_is_rejected() {
        assert!(matches!(
            regression_report(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn reordering_pairs_leaves_report_unchanged() {
        let t = [0.3, 1.1, -0.4, 2.2, 0.9, 1.7];
        let p = [0.25, 1.0, -0.5, 2.4, 1.0, 1.6];
        let a = regression_report(&t, &p).unwrap();
        let order = [5usize, 2, 0, 4, 1, 3];
        let tp: Vec<f64> = order.iter().map(|&i| t[i]).collect();
        let pp: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let b = regression_report(&tp, &pp).unwrap();
        assert!((a.r - b.r).abs() < 1e-14);
        assert!((a.slope - b.slope).abs() < 1e-14);
        assert!((a.slope_p - b.slope_p).abs() < 1e-14);
    }

    #[test]
    fn confusion_counts_and_accuracy() {
        let all_right = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(all_right.accuracy, 1.0);
        assert_eq!(all_right.trace(), 4);

        let all_wrong = confusion(&[0, 1, 0, 1], &[1, 0, 1, 0], 2).unwrap();
        assert_eq!(all_wrong.accuracy, 0.0);
        assert_eq!(all_wrong.counts, vec![vec![0, 2], vec![2, 0]]);

        let mut truth = vec![0usize; 100];
        let mut pred = vec![0usize; 100];
        truth[50..].fill(1);
        pred[50..].fill(1);
        pred[0] = 1;
        pred[99] = 0;
        let m = confusion(&truth, &pred, 2).unwrap();
        assert!((m.accuracy - 0.98).abs() < 1e-12);
    }

    #[test]
    fn confusion_rejects_out_of_range_labels() {
        assert!(matches!(
            confusion(&[0, 3], &[0, 1], 3),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn accuracy_equals_frequency_weighted_recall() {
        // accuracy = sum_c (n_c / N) * recall_c, an algebraic identity.
        let truth = [0, 0, 0, 1, 1, 2, 2, 2, 2, 0];
        let pred = [0, 1, 0, 1, 1, 2, 0, 2, 2, 0];
        let m = confusion(&truth, &pred, 3).unwrap();
        let total: f64 = truth.len() as f64;
        let mut weighted = 0.0;
        for c in 0..3 {
            let class_total: usize = m.counts[c].iter().sum();
            if class_total > 0 {
                let recall = m.counts[c][c] as f64 / class_total as f64;
                weighted += class_total as f64 / total * recall;
            }
        }
        assert!((m.accuracy - weighted).abs() < 1e-14);
    }

    #[test]
    fn student_t_matches_reference_values() {
        // Frozen reference values for the two-sided t-test p-value.
        let cases = [
            (2.5, 3.0, 0.087_706_647_008_065_55),
            (1.96, 98.0, 0.052_835_903_878_403_38),
            (0.5, 10.0, 0.627_893_605_742_972_9),
            (4.2, 98.0, 5.885_907_406_256_95e-5),
        ];
        for (t, df, want) in cases {
            let got = student_t_two_sided_p(t, df);
            assert!(
                (got - want).abs() < 1e-10,
                "t={t}, df={df}: got {got}, want {want}"
            );
            // Symmetry in t.
            assert_eq!(got, student_t_two_sided_p(-t, df));
        }
        assert!((student_t_two_sided_p(0.0, 5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn student_t_p_agrees_with_quadrature() {
        // Independent oracle: the two-sided p-value as a ratio of two
        // adaptive-Simpson integrals of the unnormalized t density
        // g(s) = (1 + s^2/df)^{-(df+1)/2}, mapped to [0, 1) by
        // s = lo + u/(1-u). No gamma function involved.
        fn simpson<F: Fn(f64) -> f64>(
            f: &F,
            lo: f64,
            hi: f64,
            flo: f64,
            fmid: f64,
            fhi: f64,
            eps: f64,
            depth: usize,
        ) -> f64 {
            let mid = 0.5 * (lo + hi);
            let lmid = 0.5 * (lo + mid);
            let rmid = 0.5 * (mid + hi);
            let flm = f(lmid);
            let frm = f(rmid);
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, lo, mid, flo, flm, fmid, eps / 2.0, depth - 1)
                    + simpson(f, mid, hi, fmid, frm, fhi, eps / 2.0, depth - 1)
            }
        }
        fn tail_integral(lo: f64, df: f64) -> f64 {
            let g = move |s: f64| (1.0 + s * s / df).powf(-(df + 1.0) / 2.0);
            // u in [0, 1): s = lo + u/(1-u), ds = du/(1-u)^2.
            let h = move |u: f64| {
                let one_minus = 1.0 - u;
                g(lo + u / one_minus) / (one_minus * one_minus)
            };
            let hi = 1.0 - 1e-8;
            simpson(&h, 0.0, hi, h(0.0), h(0.5 * hi), h(hi), 1e-14, 48)
        }
        for (t, df) in [(2.5, 3.0), (0.5, 10.0), (1.96, 98.0), (4.2, 98.0)] {
            let got = student_t_two_sided_p(t, df);
            let want = tail_integral(t, df) / tail_integral(0.0, df);
            assert!(
                (got - want).abs() < 1e-9,
                "t={t} df={df}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(2.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24.0_f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }
}
