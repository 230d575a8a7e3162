use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the `[0, 1]` intensity range.
pub const RANGE_EPS: f64 = 1e-6;
/// Smallest accepted side length.
pub const MIN_SIDE: usize = 8;

/// A single-channel 2D slice with intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSlice {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageSlice {
    /// Wrap already-normalized intensities, checking every invariant.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let img = Self { height, width, data };
        img.validate()?;
        Ok(img)
    }

    /// Min-max normalize arbitrary finite intensities into `[0, 1]`.
    ///
    /// A constant slice maps to all zeros.
    pub fn from_raw(height: usize, width: usize, raw: &[f64]) -> Result<Self> {
        check_shape(height, width, raw.len())?;
        if let Some(p) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let data = if span > 0.0 {
            raw.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
        } else {
            alloc::vec![0.0; raw.len()]
        };
        Self::new(height, width, data)
    }

    /// Constant slice; handy in tests.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, alloc::vec![value; height * width])
    }

    /// Build without range checks. Used for intermediate fields (smoothed
    /// images, noise before clamping) that stay inside this crate.
    pub(crate) fn from_parts_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn validate(&self) -> Result<()> {
        check_shape(self.height, self.width, self.data.len())?;
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if !(-RANGE_EPS..=1.0 + RANGE_EPS).contains(&v) {
                return Err(Error::IntensityRange { pixel: i, value: v });
            }
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of pixels `V`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Round every intensity through `f32`, the on-disk precision.
    pub fn quantize_f32(&self) -> Self {
        let data = self.data.iter().map(|&v| v as f32 as f64).collect();
        Self { height: self.height, width: self.width, data }
    }
}

pub(crate) fn check_shape(height: usize, width: usize, len: usize) -> Result<()> {
    if height < MIN_SIDE || width < MIN_SIDE {
        return Err(Error::TooSmall { height, width });
    }
    if height * width != len {
        return Err(Error::BufferLength { expected: height * width, got: len });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_normalization_hits_both_ends() {
        let raw: Vec<f64> = (0..64).map(|i| 3.0 + i as f64 * 0.5).collect();
        let img = ImageSlice::from_raw(8, 8, &raw).unwrap();
        assert_eq!(img.data()[0], 0.0);
        assert_eq!(img.data()[63], 1.0);
    }

    #[test]
    fn constant_raw_maps_to_zero() {
        let img = ImageSlice::from_raw(8, 8, &[4.2; 64]).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(ImageSlice::filled(4, 8, 0.5), Err(Error::TooSmall { .. })));
        let mut d = alloc::vec![0.5; 64];
        d[10] = f64::NAN;
        assert_eq!(ImageSlice::new(8, 8, d), Err(Error::NonFinite(10)));
        let mut d = alloc::vec![0.5; 64];
        d[3] = 1.1;
        assert!(matches!(ImageSlice::new(8, 8, d), Err(Error::IntensityRange { pixel: 3, .. })));
        assert!(matches!(ImageSlice::new(8, 8, alloc::vec![0.0; 63]), Err(Error::BufferLength { .. })));
    }
}
