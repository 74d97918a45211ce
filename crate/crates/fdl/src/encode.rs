//! Curve-to-image encoding.
//!
//! A normalized curve is reduced to the 28-point encoder grid and its
//! signed distance matrix `d_ij = f(x_i) - f(x_j)` is mapped affinely from
//! [-1, 1] to the grayscale range [0, 1]: `pixel = (d + 1) / 2`. Row `i` of
//! the image is the distances from sample `i`, top down.
//!
//! Grid reduction is an area average: curves longer than the grid are
//! block-averaged into 28 equal cells, which is algebraically identical to
//! computing the full n-by-n distance matrix and area-resizing it to 28x28
//! (block means commute with `d_ij = f_i - f_j`), and it attenuates sample
//! noise by the cell width. Curves shorter than the grid (such as 8-point
//! dissolution profiles) are linearly interpolated up.
//!
//! Invariants (exact in floating point): the diagonal is 0.5, and
//! `pixels[i][j] + pixels[j][i] = 1`.

use crate::curve::{minmax_normalize, resample, Curve, CurveMeta, NormalizationMode};
use crate::error::Result;

/// Side length of the encoded image.
pub const IMAGE_SIZE: usize = 28;

/// A square grayscale image produced from a curve's signed distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedImage {
    side: usize,
    pixels: Vec<f64>,
    pub source_meta: CurveMeta,
}

impl EncodedImage {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Row-major pixel data in [0, 1].
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }
}

/// The signed-distance grayscale map for an already-normalized value vector:
/// `pixel[i][j] = (v_i - v_j + 1) / 2`, row-major.
pub fn distance_image(values: &[f64]) -> Vec<f64> {
    let k = values.len();
    let mut pixels = Vec::with_capacity(k * k);
    for &vi in values {
        for &vj in values {
            pixels.push((vi - vj + 1.0) * 0.5);
        }
    }
    pixels
}

/// Encode a curve: Min-Max normalize, resample to 28 points, and build the
/// grayscale signed-distance image.
pub fn encode(curve: &Curve, mode: NormalizationMode) -> EncodedImage {
    encode_sized(curve, mode, IMAGE_SIZE)
}

/// As [`encode`], with an explicit grid side (tests use small sides).
pub fn encode_sized(curve: &Curve, mode: NormalizationMode, side: usize) -> EncodedImage {
    mode.validate().expect("invalid normalization mode");
    let normalized = minmax_normalize(curve, mode);
    let values = if normalized.len() == side {
        normalized.ys().to_vec()
    } else if normalized.len() > side {
        block_average(normalized.ys(), side)
    } else {
        // side >= 2 always; resample cannot fail.
        resample(&normalized, side)
            .expect("resample to encoder grid")
            .ys()
            .to_vec()
    };
    EncodedImage {
        side,
        pixels: distance_image(&values),
        source_meta: curve.meta.clone(),
    }
}

/// Area-average `values` into `cells` equal-width cells. Each source sample
/// is treated as a unit-width cell; fractional overlaps at cell boundaries
/// are weighted by overlap length.
fn block_average(values: &[f64], cells: usize) -> Vec<f64> {
    let n = values.len();
    let width = n as f64 / cells as f64;
    let mut out = Vec::with_capacity(cells);
    for cell in 0..cells {
        let lo = cell as f64 * width;
        let hi = (cell + 1) as f64 * width;
        let mut acc = 0.0;
        let mut total = 0.0;
        let first = lo.floor() as usize;
        let last = (hi.ceil() as usize).min(n);
        for (k, &v) in values.iter().enumerate().take(last).skip(first) {
            let overlap = (hi.min((k + 1) as f64) - lo.max(k as f64)).max(0.0);
            acc += overlap * v;
            total += overlap;
        }
        // total == width up to rounding; dividing by the accumulated value
        // keeps constant inputs exactly constant.
        out.push(acc / total);
    }
    out
}

/// Element-wise [`encode`] over a batch, order preserved.
pub fn encode_batch(curves: &[Curve], mode: NormalizationMode) -> Result<Vec<EncodedImage>> {
    mode.validate()?;
    Ok(curves.iter().map(|c| encode(c, mode)).collect())
}
