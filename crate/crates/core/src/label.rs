use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_shape, ImageSlice};

/// Per-pixel class annotation with `K >= 2` classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelMap {
    height: usize,
    width: usize,
    classes: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, classes: usize, labels: Vec<u8>) -> Result<Self> {
        let map = Self { height, width, classes, labels };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        check_shape(self.height, self.width, self.labels.len())?;
        if self.classes < 2 || self.classes > 256 {
            return Err(Error::TooFewClasses(self.classes));
        }
        if let Some((pixel, &label)) = self.labels.iter().enumerate().find(|(_, &l)| l as usize >= self.classes) {
            return Err(Error::LabelOutOfRange { pixel, label, classes: self.classes });
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of classes `K`.
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn class_of(&self, pixel: usize) -> usize {
        self.labels[pixel] as usize
    }

    /// One-hot value `y_ik`.
    #[inline]
    pub fn one_hot(&self, pixel: usize, class: usize) -> f64 {
        if self.labels[pixel] as usize == class {
            1.0
        } else {
            0.0
        }
    }

    /// Dense `V x K` one-hot matrix, row-major.
    pub fn one_hot_matrix(&self) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.labels.len() * self.classes];
        for (i, &l) in self.labels.iter().enumerate() {
            y[i * self.classes + l as usize] = 1.0;
        }
        y
    }

    /// Pixel count per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.classes];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn same_shape(&self, other: &LabelMap) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::DimensionMismatch {
                expected_h: self.height,
                expected_w: self.width,
                got_h: other.height,
                got_w: other.width,
            });
        }
        Ok(())
    }
}

/// An image paired with its annotation, checked for consistency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub image: ImageSlice,
    pub label: LabelMap,
}

impl Sample {
    /// Accept the pair only if both parts are valid and their shapes agree.
    pub fn validate(image: ImageSlice, label: LabelMap) -> Result<Self> {
        image.validate()?;
        if image.height() != label.height() || image.width() != label.width() {
            return Err(Error::DimensionMismatch {
                expected_h: image.height(),
                expected_w: image.width(),
                got_h: label.height(),
                got_w: label.width(),
            });
        }
        label.validate()?;
        Ok(Self { image, label })
    }
}
