//! Evidential segmentation losses with analytic gradients in evidence space.
//!
//! Every loss returns its scalar value together with `d loss / d e_ik`
//! laid out like the evidence (`V x K`, row-major).

use alloc::vec;
use alloc::vec::Vec;

use crate::evidence::EvidenceMap;
use crate::label::LabelMap;
use crate::special::{digamma, ln_gamma, trigamma};

/// Dice smoothing constant.
pub const DICE_EPS: f64 = 1e-5;

/// A scalar loss and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl LossGrad {
    pub fn zero(len: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; len] }
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, weight: f64, other: &LossGrad) {
        self.value += weight * other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += weight * o;
        }
    }
}

fn check_shapes(e: &EvidenceMap, y: &LabelMap) {
    assert_eq!(e.pixels(), y.len(), "evidence and label pixel counts differ");
    assert_eq!(e.classes(), y.classes(), "evidence and label class counts differ");
}

/// Per-pixel uncertainty `u_i = K / S_i`.
pub fn uncertainty(e: &EvidenceMap) -> Vec<f64> {
    (0..e.pixels()).map(|i| e.uncertainty_at(i)).collect()
}

/// Chain `d L / d u_i` through `u = K / S` into evidence space:
/// `d u_i / d e_ik = -K / S_i^2` for every class.
pub fn uncertainty_grad_to_evidence(e: &EvidenceMap, du: &[f64]) -> Vec<f64> {
    let k = e.classes();
    let mut grad = vec![0.0; e.pixels() * k];
    for (i, &g) in du.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let s = e.strength(i);
        let d = -g * k as f64 / (s * s);
        grad[i * k..(i + 1) * k].iter_mut().for_each(|v| *v = d);
    }
    grad
}

/// Evidential cross-entropy: mean over pixels of
/// `sum_k y_ik (psi(S_i) - psi(alpha_ik))`.
pub fn loss_ce(e: &EvidenceMap, y: &LabelMap) -> LossGrad {
    check_shapes(e, y);
    let (v, k) = (e.pixels(), e.classes());
    let scale = 1.0 / v as f64;
    let mut out = LossGrad::zero(v * k);
    for i in 0..v {
        let s = e.strength(i);
        let t = y.class_of(i);
        let a_t = e.alpha(i, t);
        out.value += digamma(s) - digamma(a_t);
        let ts = trigamma(s) * scale;
        let row = &mut out.grad[i * k..(i + 1) * k];
        row.iter_mut().for_each(|g| *g = ts);
        row[t] -= trigamma(a_t) * scale;
    }
    out.value *= scale;
    out
}

/// Soft Dice over expected probabilities, `1 - mean_k Dice_k` with
/// `Dice_k = (2 sum p y + eps) / (sum p^2 + sum y^2 + eps)`.
///
/// Class 0 is treated as background and skipped unless
/// `include_background` is set.
pub fn loss_dice(e: &EvidenceMap, y: &LabelMap, include_background: bool) -> LossGrad {
    check_shapes(e, y);
    let (v, k) = (e.pixels(), e.classes());
    let p = e.expected_probs();
    let first = usize::from(!include_background);
    let n_cls = (k - first) as f64;

    let mut inter = vec![0.0; k];
    let mut denom = vec![DICE_EPS; k];
    for i in 0..v {
        let t = y.class_of(i);
        for c in first..k {
            let pc = p[i * k + c];
            denom[c] += pc * pc;
        }
        if t >= first {
            inter[t] += p[i * k + t];
            denom[t] += 1.0;
        }
    }
    let mut dice_sum = 0.0;
    for c in first..k {
        dice_sum += (2.0 * inter[c] + DICE_EPS) / denom[c];
    }
    let value = 1.0 - dice_sum / n_cls;

    // dL/dp_ic, then through p = alpha / S.
    let mut grad = vec![0.0; v * k];
    let mut dp = vec![0.0; k];
    for i in 0..v {
        let t = y.class_of(i);
        for c in 0..k {
            dp[c] = 0.0;
            if c < first {
                continue;
            }
            let numer = 2.0 * inter[c] + DICE_EPS;
            let yc = if c == t { 1.0 } else { 0.0 };
            let d = denom[c];
            dp[c] = -(2.0 * yc / d - numer * 2.0 * p[i * k + c] / (d * d)) / n_cls;
        }
        let s = e.strength(i);
        let dot: f64 = (0..k).map(|c| dp[c] * p[i * k + c]).sum();
        for c in 0..k {
            grad[i * k + c] = (dp[c] - dot) / s;
        }
    }
    LossGrad { value, grad }
}

/// KL divergence from `Dir(alpha_tilde)` to the uniform `Dir(1)`, where the
/// true-class concentration is reset to 1. Mean over pixels.
pub fn loss_kl(e: &EvidenceMap, y: &LabelMap) -> LossGrad {
    check_shapes(e, y);
    let (v, k) = (e.pixels(), e.classes());
    let scale = 1.0 / v as f64;
    let ln_gamma_k = ln_gamma(k as f64);
    let mut out = LossGrad::zero(v * k);
    let mut at = vec![0.0; k];
    for i in 0..v {
        let t = y.class_of(i);
        for c in 0..k {
            at[c] = if c == t { 1.0 } else { e.alpha(i, c) };
        }
        let s: f64 = at.iter().sum();
        let psi_s = digamma(s);
        let mut kl = ln_gamma(s) - ln_gamma_k;
        for &a in at.iter() {
            kl += -ln_gamma(a) + (a - 1.0) * (digamma(a) - psi_s);
        }
        out.value += kl;
        let common = (s - k as f64) * trigamma(s);
        for c in 0..k {
            if c == t {
                continue;
            }
            out.grad[i * k + c] = ((at[c] - 1.0) * trigamma(at[c]) - common) * scale;
        }
    }
    out.value *= scale;
    out
}

/// Weights of the three segmentation terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegWeights {
    pub ce: f64,
    pub dice: f64,
    pub kl: f64,
}

/// Individual terms plus their weighted combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SegLoss {
    pub ce: f64,
    pub dice: f64,
    pub kl: f64,
    pub total: LossGrad,
}

/// `lambda_ce * CE + lambda_dice * Dice + lambda_kl * KL`.
pub fn loss_seg(e: &EvidenceMap, y: &LabelMap, w: SegWeights, include_background: bool) -> SegLoss {
    assert!(w.ce >= 0.0 && w.dice >= 0.0 && w.kl >= 0.0, "loss weights must be non-negative");
    let ce = loss_ce(e, y);
    let dice = loss_dice(e, y, include_background);
    let kl = loss_kl(e, y);
    let mut total = LossGrad::zero(e.pixels() * e.classes());
    total.add_scaled(w.ce, &ce);
    total.add_scaled(w.dice, &dice);
    total.add_scaled(w.kl, &kl);
    SegLoss { ce: ce.value, dice: dice.value, kl: kl.value, total }
}
