//! Grayscale map dumps as binary PGM (`P5`, 8-bit, maxval 255).

use std::path::Path;

use evsup_core::edl::uncertainty;
use evsup_core::eval::EvalOptions;
use evsup_core::imageops::apply_noise;
use evsup_core::nn::EvidenceModel;
use evsup_core::train::PreparedSample;
use evsup_core::{derive_seed, NoiseMode, NoiseSpec, PatchBox};

use crate::error::AppResult;
use crate::fsutil::write;

/// Noise mean used for the noise-difference maps.
pub const DIFF_NOISE_MEAN: f64 = 0.5;

/// Encode values in `[lo, hi]` as 8-bit PGM, clamping outside values.
pub fn encode_pgm(height: usize, width: usize, values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    out.extend(values.iter().map(|&v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

fn minmax(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    v.iter().map(|&x| if span > 0.0 { (x - lo) / span } else { 0.0 }).collect()
}

/// Central box covering half of each side.
pub fn central_patch(height: usize, width: usize) -> PatchBox {
    PatchBox { row0: height / 4, col0: width / 4, height: height / 2, width: width / 2 }
}

/// Writes `<id>_uncertainty.pgm` (u in [0, 1]), `<id>_gradient_overlay.pgm`
/// (|norm(u) - (1 - norm(g))|, zero where uncertainty tracks low gradient),
/// and `<id>_noise_patch_diff.pgm` / `<id>_noise_global_diff.pgm`
/// (u(noisy) - u(clean), mapped from [-1, 1]).
pub fn dump_maps<M: EvidenceModel + ?Sized>(
    dir: &Path,
    id: &str,
    model: &M,
    sample: &PreparedSample,
    index: usize,
    opts: &EvalOptions,
) -> AppResult<()> {
    let (h, w) = (sample.image.height(), sample.image.width());
    let u = uncertainty(&model.evidence(&sample.image)?);
    write(&dir.join(format!("{id}_uncertainty.pgm")), encode_pgm(h, w, &u, 0.0, 1.0))?;
    let (un, gn) = (minmax(&u), minmax(&sample.geometry.gradient));
    let overlay: Vec<f64> = un.iter().zip(&gn).map(|(a, g)| (a - (1.0 - g)).abs()).collect();
    write(&dir.join(format!("{id}_gradient_overlay.pgm")), encode_pgm(h, w, &overlay, 0.0, 1.0))?;
    for (name, mode, stream) in [
        ("noise_patch_diff", NoiseMode::Patch(central_patch(h, w)), 1u64),
        ("noise_global_diff", NoiseMode::Global, 2u64),
    ] {
        let spec = NoiseSpec {
            mean: DIFF_NOISE_MEAN,
            stddev: opts.noise_stddev,
            mode,
            seed: derive_seed(opts.seed, &[0xd1ff, index as u64, stream]),
        };
        let un = uncertainty(&model.evidence(&apply_noise(&sample.image, &spec)?)?);
        let diff: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
        write(&dir.join(format!("{id}_{name}.pgm")), encode_pgm(h, w, &diff, -1.0, 1.0))?;
    }
    Ok(())
}
