//! A small U-Net producing non-negative evidence, with explicit forward
//! caches and hand-written backpropagation, plus Adam.

mod adam;
mod layers;
mod unet;

pub use adam::Adam;
pub use layers::{softplus, softplus_grad};
pub use unet::{ForwardCache, UNet, UNetArch};

use crate::error::Result;
use crate::evidence::EvidenceMap;
use crate::image::ImageSlice;

/// Anything that maps an image to a per-pixel evidence map.
pub trait EvidenceModel {
    fn classes(&self) -> usize;
    fn evidence(&self, img: &ImageSlice) -> Result<EvidenceMap>;
}
