use alloc::vec;
use alloc::vec::Vec;

use super::segmentation::dice_pair;
use crate::label::LabelMap;

pub const DEFAULT_ECE_BINS: usize = 10;
pub const DEFAULT_UEO_STEP: f64 = 0.05;

/// Expected calibration error over `bins` equal-width confidence bins.
///
/// Confidence is the top expected probability and bin `b` covers
/// `(b / bins, (b + 1) / bins]`; a confidence of exactly 0 falls in bin 0.
pub fn ece(probs: &[f64], classes: usize, truth: &LabelMap, bins: usize) -> f64 {
    assert!(bins >= 1);
    let v = truth.len();
    assert_eq!(probs.len(), v * classes, "probability matrix does not match labels");
    let bounds: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    for i in 0..v {
        let row = &probs[i * classes..(i + 1) * classes];
        let mut best = 0;
        for k in 1..classes {
            if row[k] > row[best] {
                best = k;
            }
        }
        let conf = row[best];
        // first bin whose upper bound reaches conf
        let b = bounds[1..].partition_point(|&ub| ub < conf).min(bins - 1);
        count[b] += 1;
        conf_sum[b] += conf;
        correct[b] += usize::from(best == truth.class_of(i));
    }
    let mut total = 0.0;
    for b in 0..bins {
        if count[b] == 0 {
            continue;
        }
        let n = count[b] as f64;
        total += (n / v as f64) * libm::fabs(correct[b] as f64 / n - conf_sum[b] / n);
    }
    total
}

/// Thresholds `step, 2 step, ...` up to `1 - step`.
pub fn ueo_thresholds(step: f64) -> Vec<f64> {
    let n = libm::round(1.0 / step) as usize;
    (1..n).map(|j| j as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeoResult {
    pub value: f64,
    pub best_threshold: f64,
    /// Set when the best score came from the empty-vs-empty convention.
    pub empty_convention: bool,
}

/// Best Dice between `u >= tau` and the error mask over the threshold grid.
pub fn ueo(u: &[f64], pred: &LabelMap, truth: &LabelMap, step: f64) -> UeoResult {
    assert_eq!(u.len(), truth.len());
    let err: Vec<bool> = pred.labels().iter().zip(truth.labels()).map(|(a, b)| a != b).collect();
    let mut best = UeoResult { value: -1.0, best_threshold: 0.0, empty_convention: false };
    for tau in ueo_thresholds(step) {
        let mask: Vec<bool> = u.iter().map(|&x| x >= tau).collect();
        let d = dice_pair(&mask, &err);
        if d > best.value {
            let empty = !mask.contains(&true) && !err.contains(&true);
            best = UeoResult { value: d, best_threshold: tau, empty_convention: empty };
        }
    }
    best
}
