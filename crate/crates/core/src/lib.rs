//! Evidential segmentation with uncertainty supervision.
//!
//! This crate holds the allocation-only numerical core: evidence/Dirichlet
//! math and the segmentation losses, the gradient- and noise-based
//! uncertainty supervision losses, hard-sample detection, interpretability
//! and segmentation metrics, a synthetic scene generator and a small U-Net
//! with hand-written backpropagation.
//!
//! Pixel indexing is row-major everywhere: pixel `i` of an `h x w` slice is
//! `(i / w, i % w)`, and per-class tensors are laid out `V x K`.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! `std` only switches on runtime SIMD dispatch in the matrix kernels and
//! `std::error::Error` plumbing in the dependencies.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod config;
pub mod edl;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod geometry;
pub mod image;
pub mod imageops;
pub mod label;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod special;
pub mod supervision;
pub mod synth;
pub mod train;

pub use config::{NoiseMode, NoiseSpec, PatchBox, Profile, SupervisionConfig, TrainConfig};
pub use error::{Error, Result};
pub use evidence::EvidenceMap;
pub use geometry::BoundaryGeometry;
pub use image::ImageSlice;
pub use label::LabelMap;
pub use report::MetricsReport;

/// Seeded generator used for every stochastic step in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate's RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Mix a base seed with stream indices (splitmix64 finalizer per word), so
/// every epoch/sample/purpose gets an independent, reproducible seed.
pub fn derive_seed(base: u64, stream: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    stream.iter().fold(mix(base), |acc, &s| mix(acc ^ mix(s)))
}
