use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Boundary-relative geometry of a label map.
///
/// `distance[i]` is the Euclidean distance (pixels) from `i` to the nearest
/// raw boundary pixel, `+inf` when the label map has a single class.
/// `boundary` lists the pixels with `distance <= radius`, ascending.
/// `gradient` is the smoothed image gradient magnitude; it stays empty until
/// [`BoundaryGeometry::with_gradient`] attaches one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    pub height: usize,
    pub width: usize,
    pub radius: f64,
    pub boundary: Vec<usize>,
    pub distance: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl BoundaryGeometry {
    /// False when the label map had no class transition at all.
    pub fn has_boundary(&self) -> bool {
        !self.boundary.is_empty()
    }

    pub fn with_gradient(mut self, gradient: Vec<f64>) -> Self {
        debug_assert_eq!(gradient.len(), self.distance.len());
        self.gradient = gradient;
        self
    }

    /// Pixels with `distance <= d0`, ascending.
    pub fn near(&self, d0: f64) -> Vec<usize> {
        (0..self.distance.len()).filter(|&i| self.distance[i] <= d0).collect()
    }

    /// Gradient values on the boundary set, in boundary order.
    pub fn boundary_gradient(&self) -> Vec<f64> {
        self.boundary.iter().map(|&i| self.gradient[i]).collect()
    }
}
