use alloc::vec;
use alloc::vec::Vec;

use crate::imageops::squared_distance_transform;
use crate::label::LabelMap;

/// `2|A n B| / (|A| + |B|)`, with the empty-empty case scored 1.
pub fn dice_pair(a: &[bool], b: &[bool]) -> f64 {
    let (mut inter, mut sa, mut sb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        inter += usize::from(x && y);
        sa += usize::from(x);
        sb += usize::from(y);
    }
    if sa + sb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (sa + sb) as f64
    }
}

/// Dice per class (all `K`, background included) and the foreground mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DscResult {
    pub per_class: Vec<f64>,
    pub mean: f64,
}

pub fn dsc(pred: &LabelMap, truth: &LabelMap) -> DscResult {
    assert_eq!(pred.len(), truth.len(), "label maps differ in size");
    let k = truth.classes();
    let per_class: Vec<f64> = (0..k)
        .map(|c| {
            let a: Vec<bool> = pred.labels().iter().map(|&l| l as usize == c).collect();
            let b: Vec<bool> = truth.labels().iter().map(|&l| l as usize == c).collect();
            dice_pair(&a, &b)
        })
        .collect();
    let mean = per_class[1..].iter().sum::<f64>() / (k - 1) as f64;
    DscResult { per_class, mean }
}

/// Mask pixels with a 4-neighbour outside the mask (the image border counts
/// as outside).
pub fn surface_mask(mask: &[bool], height: usize, width: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !mask[i] {
                continue;
            }
            let inside = |yy: usize, xx: usize| mask[yy * width + xx];
            out[i] = x == 0
                || y == 0
                || x + 1 == width
                || y + 1 == height
                || !inside(y, x - 1)
                || !inside(y, x + 1)
                || !inside(y - 1, x)
                || !inside(y + 1, x);
        }
    }
    out
}

/// Percentile `q` in `[0, 100]` of `values` with linear interpolation between
/// order statistics (position `(n - 1) q / 100`).
pub fn percentile_linear(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let pos = (values.len() - 1) as f64 * q / 100.0;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(values.len() - 1);
    let frac = pos - lo as f64;
    values[lo] + (values[hi] - values[lo]) * frac
}

/// Per-class HD95 and the mean over evaluated foreground classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hd95Result {
    /// Indexed by class; `None` for background and for skipped classes.
    pub per_class: Vec<Option<f64>>,
    pub mean: Option<f64>,
    /// Foreground classes skipped because one of the masks was empty.
    pub skipped: Vec<usize>,
}

/// 95th percentile of the pooled symmetric surface-to-surface distances.
pub fn hd95(pred: &LabelMap, truth: &LabelMap) -> Hd95Result {
    assert_eq!(pred.len(), truth.len(), "label maps differ in size");
    let (h, w, k) = (truth.height(), truth.width(), truth.classes());
    let mut per_class = vec![None; k];
    let mut skipped = Vec::new();
    for c in 1..k {
        let a: Vec<bool> = pred.labels().iter().map(|&l| l as usize == c).collect();
        let b: Vec<bool> = truth.labels().iter().map(|&l| l as usize == c).collect();
        if !a.contains(&true) || !b.contains(&true) {
            skipped.push(c);
            continue;
        }
        let sa = surface_mask(&a, h, w);
        let sb = surface_mask(&b, h, w);
        let da = squared_distance_transform(&sa, h, w);
        let db = squared_distance_transform(&sb, h, w);
        let mut dists = Vec::new();
        for i in 0..h * w {
            if sa[i] {
                dists.push(libm::sqrt(db[i]));
            }
            if sb[i] {
                dists.push(libm::sqrt(da[i]));
            }
        }
        per_class[c] = Some(percentile_linear(&mut dists, 95.0));
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
    Hd95Result { per_class, mean, skipped }
}
