//! Evaluation metrics.
//!
//! Interpretability: UCC (Spearman correlation of uncertainty against the
//! boundary gradient or the noise level) and UR (share of pixel pairs whose
//! ordering agrees with the expected direction). Segmentation and
//! calibration: DSC, HD95, ECE, UEO. Robustness: pairwise deltas over a
//! noise sweep.

mod calibration;
mod interpret;
mod rank;
mod robustness;
mod segmentation;

pub use calibration::{ece, ueo, ueo_thresholds, UeoResult, DEFAULT_ECE_BINS, DEFAULT_UEO_STEP};
pub use interpret::{ucc_gradient, ucc_noise, ur_gradient, ur_noise, NoiseLevelMap, UrResult};
pub use rank::{fractional_ranks, pearson, spearman};
pub use robustness::{mean_abs, robustness_deltas, LevelScore, ScoreDelta, DEFAULT_SWEEP};
pub use segmentation::{dice_pair, dsc, hd95, percentile_linear, surface_mask, DscResult, Hd95Result};
