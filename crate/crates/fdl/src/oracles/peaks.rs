//! Peak detection with topographic prominence and half-prominence widths.
//!
//! Peaks are strict interior local maxima of the sampled curve (endpoints
//! are never peaks). Prominence follows the standard topographic definition:
//! the drop from the peak to the highest saddle separating it from any
//! higher terrain, with the search window clipped to the domain, so an
//! edge-dominant peak is measured against the interior minima. The width is
//! the horizontal extent of the contour at `peak - prominence / 2`, with
//! linear interpolation between the bracketing samples on each side.

use crate::curve::Curve;

/// Peak summary of a curve. `count = 0` means no interior local maximum
/// exists, in which case height and width are absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakMetrics {
    pub count: usize,
    pub max_height: Option<f64>,
    pub half_prom_width: Option<f64>,
}

/// Strict interior local maxima indices.
fn interior_maxima(ys: &[f64]) -> Vec<usize> {
    (1..ys.len() - 1)
        .filter(|&i| ys[i] > ys[i - 1] && ys[i] > ys[i + 1])
        .collect()
}

/// Topographic prominence of the peak at `idx`, plus the window base indices
/// used for the contour search.
fn prominence(ys: &[f64], idx: usize) -> (f64, usize, usize) {
    let h = ys[idx];
    // Walk left until strictly higher terrain (or the boundary), tracking
    // the lowest point seen: that is the left base.
    let mut left_base = idx;
    let mut min_left = h;
    let mut j = idx;
    while j > 0 {
        j -= 1;
        if ys[j] > h {
            break;
        }
        if ys[j] < min_left {
            min_left = ys[j];
            left_base = j;
        }
    }
    let mut right_base = idx;
    let mut min_right = h;
    let mut j = idx;
    while j + 1 < ys.len() {
        j += 1;
        if ys[j] > h {
            break;
        }
        if ys[j] < min_right {
            min_right = ys[j];
            right_base = j;
        }
    }
    (h - min_left.max(min_right), left_base, right_base)
}

/// Interpolated x where the curve crosses `level` while descending from the
/// peak toward `base` (searching left when `dir < 0`).
fn contour_crossing(xs: &[f64], ys: &[f64], peak: usize, base: usize, level: f64, dir: i64) -> f64 {
    let mut i = peak;
    loop {
        let next = (i as i64 + dir) as usize;
        if ys[next] <= level {
            let denom = ys[i] - ys[next];
            let t = if denom > 0.0 {
                (ys[i] - level) / denom
            } else {
                0.0
            };
            return xs[i] + t * (xs[next] - xs[i]);
        }
        i = next;
        if i == base {
            // Clipped at the window base.
            return xs[base];
        }
    }
}

/// Peak metrics of a (noise-free) curve: number of interior peaks, the
/// height of the tallest one, and its half-prominence width.
pub fn peak_metrics(curve: &Curve) -> PeakMetrics {
    let xs = curve.xs();
    let ys = curve.ys();
    let maxima = interior_maxima(ys);
    if maxima.is_empty() {
        return PeakMetrics {
            count: 0,
            max_height: None,
            half_prom_width: None,
        };
    }
    let tallest = *maxima
        .iter()
        .max_by(|&&a, &&b| ys[a].partial_cmp(&ys[b]).unwrap())
        .unwrap();
    let (prom, left_base, right_base) = prominence(ys, tallest);
    let level = ys[tallest] - prom * 0.5;
    let x_left = contour_crossing(xs, ys, tallest, left_base, level, -1);
    let x_right = contour_crossing(xs, ys, tallest, right_base, level, 1);
    PeakMetrics {
        count: maxima.len(),
        max_height: Some(ys[tallest]),
        half_prom_width: Some(x_right - x_left),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveMeta;
    use crate::synth::{gen_gaussian_mixture, GaussianMixtureSpec};

    #[test]
    fn single_gaussian_full_prominence_width() {
        // H=100, W=10, P=25 on [0,50]: one peak of height 100 whose
        // half-prominence contour is analytically 2 W sqrt(ln 2) = 16.651
        // (the far tails make the sampled prominence 99.8, hence the loose
        // tolerance).
        let spec = GaussianMixtureSpec {
            heights: [100.0, 0.0],
            widths: [10.0, 1.0],
            positions: [25.0, 1.0],
            n: 1001,
        };
        let c = gen_gaussian_mixture(&spec, 0).unwrap();
        let m = peak_metrics(&c);
        assert_eq!(m.count, 1);
        assert!((m.max_height.unwrap() - 100.0).abs() < 1e-9);
        let width = m.half_prom_width.unwrap();
        assert!(
            (width - 16.651_092_223_153_952).abs() < 0.05,
            "width {width}"
        );
    }

    #[test]
    fn zero_curve_has_no_peaks() {
        let c = Curve::from_fn(0.0, 50.0, 200, |_| 0.0, CurveMeta::unknown()).unwrap();
        let m = peak_metrics(&c);
        assert_eq!(m.count, 0);
        assert_eq!(m.max_height, None);
        assert_eq!(m.half_prom_width, None);
    }

    #[test]
    fn two_equal_separated_gaussians() {
        let spec = GaussianMixtureSpec {
            heights: [100.0, 100.0],
            widths: [5.0, 5.0],
            positions: [10.0, 40.0],
            n: 2001,
        };
        let c = gen_gaussian_mixture(&spec, 0).unwrap();
        let m = peak_metrics(&c);
        assert_eq!(m.count, 2);
        // Cross terms at 30 sigma-equivalents of separation are < 1e-6.
        assert!((m.max_height.unwrap() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn merged_kernels_make_one_peak() {
        let spec = GaussianMixtureSpec {
            heights: [100.0, 90.0],
            widths: [10.0, 10.0],
            positions: [24.0, 26.0],
            n: 1001,
        };
        let c = gen_gaussian_mixture(&spec, 0).unwrap();
        assert_eq!(peak_metrics(&c).count, 1);
    }

    #[test]
    fn secondary_peak_prominence_uses_saddle() {
        // Tall peak at 15, short peak at 35 with a saddle between them: the
        // short peak's width is measured from its saddle-referenced
        // prominence; the reported metrics describe the tallest peak.
        let spec = GaussianMixtureSpec {
            heights: [100.0, 60.0],
            widths: [6.0, 6.0],
            positions: [15.0, 35.0],
            n: 2001,
        };
        let c = gen_gaussian_mixture(&spec, 0).unwrap();
        let m = peak_metrics(&c);
        assert_eq!(m.count, 2);
        let h = m.max_height.unwrap();
        assert!((h - 100.0).abs() < 0.2, "height {h}");
    }

    #[test]
    fn width_scales_with_x_dilation_height_invariant() {
        let base = GaussianMixtureSpec {
            heights: [120.0, 40.0],
            widths: [8.0, 3.0],
            positions: [20.0, 38.0],
            n: 3001,
        };
        let c = gen_gaussian_mixture(&base, 0).unwrap();
        let m1 = peak_metrics(&c);
        // Dilate the x axis by k: same ordinates on a stretched grid.
        let k = 2.5;
        let xs: Vec<f64> = c.xs().iter().map(|&x| k * x).collect();
        let stretched = Curve::new(xs, c.ys().to_vec(), c.meta.clone()).unwrap();
        let m2 = peak_metrics(&stretched);
        assert_eq!(m1.count, m2.count);
        assert_eq!(m1.max_height, m2.max_height);
        let w1 = m1.half_prom_width.unwrap();
        let w2 = m2.half_prom_width.unwrap();
        assert!((w2 / w1 - k).abs() < 1e-9, "ratio {}", w2 / w1);
    }
}
