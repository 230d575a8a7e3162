use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-pixel, per-class non-negative evidence `E` (row-major `V x K`).
///
/// The Dirichlet view is derived on demand: `alpha = e + 1`,
/// `S = sum_k alpha`, `p = alpha / S`, `u = K / S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceMap {
    pixels: usize,
    classes: usize,
    evidence: Vec<f64>,
}

impl EvidenceMap {
    pub fn new(pixels: usize, classes: usize, evidence: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        if evidence.len() != pixels * classes {
            return Err(Error::BufferLength { expected: pixels * classes, got: evidence.len() });
        }
        if let Some(i) = evidence.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidEvidence(i));
        }
        Ok(Self { pixels, classes, evidence })
    }

    pub fn zeros(pixels: usize, classes: usize) -> Self {
        Self { pixels, classes, evidence: alloc::vec![0.0; pixels * classes] }
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn evidence(&self) -> &[f64] {
        &self.evidence
    }

    /// Evidence row `e_i`.
    #[inline]
    pub fn row(&self, pixel: usize) -> &[f64] {
        &self.evidence[pixel * self.classes..(pixel + 1) * self.classes]
    }

    #[inline]
    pub fn alpha(&self, pixel: usize, class: usize) -> f64 {
        self.evidence[pixel * self.classes + class] + 1.0
    }

    /// Dirichlet strength `S_i`.
    #[inline]
    pub fn strength(&self, pixel: usize) -> f64 {
        self.row(pixel).iter().sum::<f64>() + self.classes as f64
    }

    /// Uncertainty `u_i = K / S_i`.
    #[inline]
    pub fn uncertainty_at(&self, pixel: usize) -> f64 {
        self.classes as f64 / self.strength(pixel)
    }

    /// Expected probabilities `p_ik = alpha_ik / S_i`, row-major `V x K`.
    pub fn expected_probs(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.evidence.len());
        for i in 0..self.pixels {
            let s = self.strength(i);
            p.extend(self.row(i).iter().map(|e| (e + 1.0) / s));
        }
        p
    }

    /// Per-pixel argmax of the expected probabilities (lowest index wins ties).
    pub fn predicted_labels(&self) -> Vec<u8> {
        (0..self.pixels)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for k in 1..self.classes {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best as u8
            })
            .collect()
    }
}
