//! Synthetic cardiac-like scenes: a ring (class 1) around a cavity
//! (class 2) on background, optionally with a separate blob (class 3).
//!
//! Each class transition is rendered as a Gaussian-blurred step with its
//! own width `sigma_b`, so boundaries range from sharp (`sigma_b = 0`,
//! large gradient) to ambiguous (large `sigma_b`, small gradient). Labels
//! come from the exact analytic shapes and are unaffected by the blur.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageSlice;
use crate::imageops::{extract_boundary_geometry, gaussian_smooth};
use crate::label::{LabelMap, Sample};
use crate::rng_from_seed;

/// Ranges the generator draws scene parameters from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    /// 3 (ring + cavity) or 4 (plus a separate blob).
    pub classes: usize,
    pub blur_min: f64,
    pub blur_max: f64,
    /// Std of the smoothed Gaussian texture added everywhere.
    pub texture: f64,
    /// Half-width of the uniform jitter on each region's mean intensity.
    pub intensity_jitter: f64,
    pub max_attempts: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            classes: 3,
            blur_min: 0.0,
            blur_max: 3.0,
            texture: 0.03,
            intensity_jitter: 0.025,
            max_attempts: 200,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.classes == 3 || self.classes == 4) {
            return bad("scenes support K = 3 or K = 4");
        }
        if self.height < 32 || self.width < 32 {
            return bad("scenes need at least 32x32 pixels");
        }
        if !(0.0 <= self.blur_min && self.blur_min <= self.blur_max && self.blur_max <= 3.0) {
            return bad("boundary blur must satisfy 0 <= min <= max <= 3");
        }
        if !(self.texture >= 0.0) || !(0.0..=0.025).contains(&self.intensity_jitter) {
            return bad("texture must be >= 0 and intensity jitter within [0, 0.025]");
        }
        Ok(())
    }
}

/// Rotated ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cy: f64,
    pub cx: f64,
    pub ay: f64,
    pub ax: f64,
    pub theta: f64,
}

impl Ellipse {
    /// First-order signed distance (negative inside).
    pub fn signed_distance(&self, y: f64, x: f64) -> f64 {
        let (s, c) = (libm::sin(self.theta), libm::cos(self.theta));
        let (dy, dx) = (y - self.cy, x - self.cx);
        let v = -s * dx + c * dy;
        let u = c * dx + s * dy;
        let f = libm::sqrt((u / self.ax) * (u / self.ax) + (v / self.ay) * (v / self.ay));
        let gu = u / (self.ax * self.ax);
        let gv = v / (self.ay * self.ay);
        let grad = libm::sqrt(gu * gu + gv * gv);
        if f < 1e-9 || grad < 1e-12 {
            return -self.ax.min(self.ay);
        }
        // |grad f| = |(u/a^2, v/b^2)| / f
        (f - 1.0) * f / grad
    }
}

/// One class transition and its blur width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub name: String,
    pub classes: (u8, u8),
    pub sigma: f64,
}

/// Fully specified scene; what the generator draws and what provenance
/// records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub outer: Ellipse,
    pub inner: Ellipse,
    pub blob: Option<Ellipse>,
    /// Mean intensity of background, ring, cavity and blob.
    pub intensities: Vec<f64>,
    /// Blur per boundary: outer, inner, blob.
    pub blur: Vec<f64>,
    pub texture: f64,
    pub texture_seed: u64,
}

/// Provenance sidecar of one generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub attempts: usize,
    pub params: SceneParams,
    pub boundaries: Vec<BoundaryRecord>,
    pub class_counts: Vec<usize>,
}

const BASE_LEVELS: [f64; 4] = [0.40, 0.10, 0.85, 0.62];

fn smooth_step(sd: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if sd < 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        0.5 * libm::erfc(sd / (sigma * core::f64::consts::SQRT_2))
    }
}

/// Render image and labels for fixed parameters.
pub fn render_scene(height: usize, width: usize, p: &SceneParams) -> Result<Sample> {
    let classes = if p.blob.is_some() { 4 } else { 3 };
    let mut raw = vec![0.0; height * width];
    let mut labels = vec![0u8; height * width];
    let lv = &p.intensities;
    for y in 0..height {
        for x in 0..width {
            let (fy, fx) = (y as f64, x as f64);
            let so = p.outer.signed_distance(fy, fx);
            let si = p.inner.signed_distance(fy, fx);
            let mut v =
                lv[0] + (lv[1] - lv[0]) * smooth_step(so, p.blur[0]) + (lv[2] - lv[1]) * smooth_step(si, p.blur[1]);
            let mut l = if si < 0.0 {
                2
            } else if so < 0.0 {
                1
            } else {
                0
            };
            if let Some(b) = &p.blob {
                let sb = b.signed_distance(fy, fx);
                v += (lv[3] - lv[0]) * smooth_step(sb, p.blur[2]);
                if sb < 0.0 {
                    l = 3;
                }
            }
            raw[y * width + x] = v;
            labels[y * width + x] = l;
        }
    }
    if p.texture > 0.0 {
        let mut rng = rng_from_seed(p.texture_seed);
        let normal = Normal::new(0.0, p.texture).expect("positive texture");
        let field: Vec<f64> = (0..height * width).map(|_| normal.sample(&mut rng)).collect();
        // unit-variance-ish correlated texture
        let smooth = gaussian_smooth(&ImageSlice::from_parts_unchecked(height, width, field), 1.0);
        let gain = 2.0 * libm::sqrt(core::f64::consts::PI);
        raw.iter_mut().zip(smooth.data()).for_each(|(r, t)| *r += gain * t);
    }
    let image = ImageSlice::from_raw(height, width, &raw)?.quantize_f32();
    let label = LabelMap::new(height, width, classes, labels)?;
    Sample::validate(image, label)
}

const BLOB_PLACEMENT_TRIES: usize = 64;

fn draw_params<R: rand::RngCore>(spec: &SceneSpec, rng: &mut R) -> SceneParams {
    let (h, w) = (spec.height as f64, spec.width as f64);
    let scale = h.min(w) / 64.0;
    let ay = rng.random_range(12.0..20.0) * scale;
    let ax = rng.random_range(12.0..20.0) * scale;
    let reach = ay.max(ax) + 3.0;
    let outer = Ellipse {
        cy: rng.random_range(reach..(h - reach).max(reach + 1e-9)),
        cx: rng.random_range(reach..(w - reach).max(reach + 1e-9)),
        ay,
        ax,
        theta: rng.random_range(0.0..core::f64::consts::PI),
    };
    let thickness = rng.random_range(3.5..7.0) * scale;
    let inner = Ellipse { ay: ay - thickness, ax: ax - thickness, ..outer };
    let blob = (spec.classes == 4).then(|| {
        let r = rng.random_range(6.0..10.0) * scale;
        let mut centre = (0.0, 0.0);
        for _ in 0..BLOB_PLACEMENT_TRIES {
            centre = (rng.random_range(r + 2.0..h - r - 2.0), rng.random_range(r + 2.0..w - r - 2.0));
            if outer.signed_distance(centre.0, centre.1) > r + 3.0 {
                break;
            }
        }
        Ellipse {
            cy: centre.0,
            cx: centre.1,
            ay: r * rng.random_range(0.8..1.0),
            ax: r,
            theta: rng.random_range(0.0..core::f64::consts::PI),
        }
    });
    let j = spec.intensity_jitter;
    let intensities =
        BASE_LEVELS[..spec.classes].iter().map(|&b| if j > 0.0 { b + rng.random_range(-j..j) } else { b }).collect();
    let n_boundaries = spec.classes - 1;
    let blur =
        (0..n_boundaries)
            .map(|_| {
                if spec.blur_max > spec.blur_min {
                    rng.random_range(spec.blur_min..spec.blur_max)
                } else {
                    spec.blur_min
                }
            })
            .collect();
    SceneParams { outer, inner, blob, intensities, blur, texture: spec.texture, texture_seed: rng.random() }
}

/// Boundary records in the order of `SceneParams::blur`.
pub fn boundary_records(p: &SceneParams) -> Vec<BoundaryRecord> {
    let mut out = vec![
        BoundaryRecord { name: "outer".into(), classes: (0, 1), sigma: p.blur[0] },
        BoundaryRecord { name: "inner".into(), classes: (1, 2), sigma: p.blur[1] },
    ];
    if p.blob.is_some() {
        out.push(BoundaryRecord { name: "blob".into(), classes: (0, 3), sigma: p.blur[2] });
    }
    out
}

fn acceptable(sample: &Sample, p: &SceneParams, d0: f64) -> bool {
    let counts = sample.label.class_counts();
    let (lo, hi) = (counts.iter().min().copied().unwrap_or(0), counts.iter().max().copied().unwrap_or(0));
    if lo == 0 || hi > 20 * lo {
        return false;
    }
    if let Some(b) = &p.blob {
        // keep the blob clear of the ring, so each pixel has one analytic owner
        let (h, w) = (sample.label.height(), sample.label.width());
        for y in 0..h {
            for x in 0..w {
                if b.signed_distance(y as f64, x as f64) < 2.0 && p.outer.signed_distance(y as f64, x as f64) < 2.0 {
                    return false;
                }
            }
        }
    }
    let geom = extract_boundary_geometry(&sample.label, 1.0);
    geom.has_boundary() && geom.distance.iter().any(|&d| d > d0)
}

/// Draw and render one scene, retrying draws that violate the class
/// balance, overlap or geometry constraints.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<(Sample, Provenance)> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    for attempt in 1..=spec.max_attempts {
        let params = draw_params(spec, &mut rng);
        let sample = render_scene(spec.height, spec.width, &params)?;
        if acceptable(&sample, &params, 4.0) {
            let class_counts = sample.label.class_counts();
            let boundaries = boundary_records(&params);
            return Ok((sample, Provenance { seed, attempts: attempt, params, boundaries, class_counts }));
        }
    }
    Err(Error::GenerationFailed(spec.max_attempts))
}
