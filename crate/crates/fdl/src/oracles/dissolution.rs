//! FDA/EMA dissolution-profile difference and similarity factors.
//!
//! For a reference profile R and test profile S at n common time points:
//!
//!   f1 = sum|R_i - S_i| / sum R_i * 100%
//!   f2 = 50 log10( [1 + (1/n) sum (R_i - S_i)^2]^{-1/2} * 100 )
//!
//! Profiles are declared similar iff f1 is within [0, 15] and f2 within
//! [50, 100].

use crate::error::{Error, Result};

pub const F1_SIMILAR_MAX: f64 = 15.0;
pub const F2_SIMILAR_MIN: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityScores {
    /// Difference factor (percent, >= 0). Identical profiles give 0.
    pub f1: f64,
    /// Similarity factor. Identical profiles give exactly 100.
    pub f2: f64,
}

impl SimilarityScores {
    /// Regulatory decision rule: similar iff f1 in [0, 15] and f2 in [50, 100].
    pub fn is_similar(&self) -> bool {
        (0.0..=F1_SIMILAR_MAX).contains(&self.f1) && (F2_SIMILAR_MIN..=100.0).contains(&self.f2)
    }
}

/// Evaluate f1 and f2 for two equal-length profiles.
pub fn f1_f2(reference: &[f64], test: &[f64]) -> Result<SimilarityScores> {
    if reference.len() != test.len() {
        return Err(Error::InvalidArgument(format!(
            "profile lengths differ: {} vs {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("empty profiles".into()));
    }
    let n = reference.len() as f64;
    let sum_ref: f64 = reference.iter().sum();
    if sum_ref <= 0.0 {
        return Err(Error::Degenerate(
            "f1 undefined: reference profile sums to zero".into(),
        ));
    }
    let mut abs_diff = 0.0;
    let mut sq_diff = 0.0;
    for (&r, &s) in reference.iter().zip(test) {
        abs_diff += (r - s).abs();
        sq_diff += (r - s) * (r - s);
    }
    let f1 = abs_diff / sum_ref * 100.0;
    let f2 = 50.0 * ((1.0 + sq_diff / n).powf(-0.5) * 100.0).log10();
    Ok(SimilarityScores { f1, f2 })
}
