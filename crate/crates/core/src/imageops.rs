//! Deterministic image primitives: Gaussian smoothing, gradient magnitude,
//! boundary extraction with an exact Euclidean distance transform, and
//! additive noise injection.

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, Normal};

use crate::config::{NoiseMode, NoiseSpec};
use crate::error::Result;
use crate::geometry::BoundaryGeometry;
use crate::image::ImageSlice;
use crate::label::LabelMap;

/// Half-sample symmetric reflection of `idx` into `[0, n)`
/// (`... b a | a b c ... | c b ...`), valid for any offset.
#[inline]
pub fn reflect_index(idx: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = idx.rem_euclid(period) as usize;
    if m >= n {
        2 * n - 1 - m
    } else {
        m
    }
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-radius..=radius).map(|o| libm::exp(-((o * o) as f64) / (2.0 * sigma * sigma))).collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Separable Gaussian blur with reflect padding. `sigma == 0` is the identity.
pub fn gaussian_smooth(img: &ImageSlice, sigma: f64) -> ImageSlice {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    if sigma == 0.0 {
        return img.clone();
    }
    let (h, w) = (img.height(), img.width());
    let taps = gaussian_kernel(sigma);
    let r = (taps.len() / 2) as isize;
    let src = img.data();

    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * src[y * w + reflect_index(x as isize + t as isize - r, w)];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * rows[reflect_index(y as isize + t as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    ImageSlice::from_parts_unchecked(h, w, out)
}

/// `sqrt(gx^2 + gy^2)` with central differences inside and one-sided
/// differences on the border rows/columns.
pub fn gradient_magnitude(img: &ImageSlice) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let at = |y: usize, x: usize| img.get(y, x);
    let mut g = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let gx = if x == 0 {
                at(y, 1) - at(y, 0)
            } else if x == w - 1 {
                at(y, w - 1) - at(y, w - 2)
            } else {
                (at(y, x + 1) - at(y, x - 1)) / 2.0
            };
            let gy = if y == 0 {
                at(1, x) - at(0, x)
            } else if y == h - 1 {
                at(h - 1, x) - at(h - 2, x)
            } else {
                (at(y + 1, x) - at(y - 1, x)) / 2.0
            };
            g[y * w + x] = libm::sqrt(gx * gx + gy * gy);
        }
    }
    g
}

/// Gradient magnitude of the image after Gaussian smoothing with `sigma`.
pub fn smoothed_gradient(img: &ImageSlice, sigma: f64) -> Vec<f64> {
    gradient_magnitude(&gaussian_smooth(img, sigma))
}

/// Pixels with at least one 4-neighbour of a different class.
pub fn raw_boundary_mask(label: &LabelMap) -> Vec<bool> {
    let (h, w) = (label.height(), label.width());
    let l = label.labels();
    let mut mask = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let c = l[y * w + x];
            let differs = (x > 0 && l[y * w + x - 1] != c)
                || (x + 1 < w && l[y * w + x + 1] != c)
                || (y > 0 && l[(y - 1) * w + x] != c)
                || (y + 1 < h && l[(y + 1) * w + x] != c);
            mask[y * w + x] = differs;
        }
    }
    mask
}

/// Exact squared Euclidean distance to the nearest `true` pixel of `seeds`.
///
/// Separable lower-envelope-of-parabolas transform, first along columns and
/// then along rows. Pixels with no seed anywhere get `+inf`.
pub fn squared_distance_transform(seeds: &[bool], height: usize, width: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let n = height.max(width);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut hull = vec![0usize; n];
    let mut bounds = vec![0.0; n + 1];

    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        lower_envelope(&f[..height], &mut out[..height], &mut hull, &mut bounds);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        lower_envelope(&f[..width], &mut out[..width], &mut hull, &mut bounds);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    grid
}

/// 1D squared distance transform of a sampled function `f` (entries may be
/// `+inf`). All arithmetic on finite inputs is exact for integer grids.
fn lower_envelope(f: &[f64], out: &mut [f64], hull: &mut [usize], bounds: &mut [f64]) {
    let n = f.len();
    let mut k: isize = -1;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                hull[0] = q;
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                break;
            }
            let p = hull[k as usize];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= bounds[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            hull[k as usize] = q;
            bounds[k as usize] = s;
            bounds[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while bounds[j + 1] < q as f64 {
            j += 1;
        }
        let p = hull[j];
        let dq = q as f64 - p as f64;
        *o = dq * dq + f[p];
    }
}

/// Boundary set and distance map of a label map; the gradient map is left
/// empty. A single-class label yields an empty set and `d = +inf`.
pub fn extract_boundary_geometry(label: &LabelMap, boundary_radius: f64) -> BoundaryGeometry {
    let (h, w) = (label.height(), label.width());
    let raw = raw_boundary_mask(label);
    let distance: Vec<f64> = squared_distance_transform(&raw, h, w).into_iter().map(libm::sqrt).collect();
    let boundary = (0..h * w).filter(|&i| distance[i] <= boundary_radius).collect();
    BoundaryGeometry { height: h, width: w, radius: boundary_radius, boundary, distance, gradient: Vec::new() }
}

/// Boundary geometry plus the smoothed gradient of `img`.
pub fn boundary_geometry(img: &ImageSlice, label: &LabelMap, boundary_radius: f64, sigma: f64) -> BoundaryGeometry {
    extract_boundary_geometry(label, boundary_radius).with_gradient(smoothed_gradient(img, sigma))
}

/// The raw additive noise field (before clamping) that [`apply_noise`] uses.
/// Entries outside a patch are zero.
pub fn noise_field(height: usize, width: usize, spec: &NoiseSpec) -> Vec<f64> {
    let mut rng = crate::rng_from_seed(spec.seed);
    let mut field = vec![0.0; height * width];
    let normal = Normal::new(spec.mean, spec.stddev).expect("validated stddev");
    for y in 0..height {
        for x in 0..width {
            let inside = match spec.mode {
                NoiseMode::Global => true,
                NoiseMode::Patch(b) => b.contains(y, x),
            };
            if inside {
                field[y * width + x] = if spec.stddev == 0.0 { spec.mean } else { normal.sample(&mut rng) };
            }
        }
    }
    field
}

/// Add `N(mean, stddev^2)` noise (everywhere or inside a patch) and clamp
/// the result into `[0, 1]`.
pub fn apply_noise(img: &ImageSlice, spec: &NoiseSpec) -> Result<ImageSlice> {
    spec.validate(img.height(), img.width())?;
    let field = noise_field(img.height(), img.width(), spec);
    let data = img.data().iter().zip(&field).map(|(&v, &n)| (v + n).clamp(0.0, 1.0)).collect();
    Ok(ImageSlice::from_parts_unchecked(img.height(), img.width(), data))
}
