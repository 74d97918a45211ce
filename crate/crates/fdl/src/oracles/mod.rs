//! Classical ground-truth and baseline algorithms: prominence-based peak
//! metrics, the f1/f2 dissolution similarity factors, and the Rosenstein and
//! Benettin largest-Lyapunov-exponent estimators.

pub mod dissolution;
pub mod lyapunov;
pub mod peaks;

pub use dissolution::{f1_f2, SimilarityScores};
pub use lyapunov::{
    benettin_lle, benettin_lle_lorenz, rosenstein_lle, LleEstimate, RosensteinConfig,
};
pub use peaks::{peak_metrics, PeakMetrics};
