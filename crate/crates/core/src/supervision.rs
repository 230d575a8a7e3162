//! Uncertainty supervision: the boundary gradient ranking loss, the
//! two-level noise loss, hard-sample detection and class-balanced sampling.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use rand::RngCore;

use crate::config::{NoiseSpec, SupervisionConfig};
use crate::edl::uncertainty;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGeometry;
use crate::image::ImageSlice;
use crate::imageops::apply_noise;
use crate::label::LabelMap;
use crate::nn::EvidenceModel;

/// Value of the gradient loss and `d L / d u` (length `V`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientLoss {
    pub value: f64,
    pub grad_u: Vec<f64>,
    /// Ordered pairs actually evaluated.
    pub pairs: usize,
    /// True when the pair set was subsampled and rescaled.
    pub sampled: bool,
    /// Set when `B` was empty and no supervision was possible.
    pub empty_boundary: bool,
}

/// Draw an ordered pair `(a, b)`, `a != b`, uniformly from `0..n`.
pub fn random_ordered_pair<R: RngCore>(rng: &mut R, n: usize) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// `(1/|B|) sum_{i != j in B} max(0, (u_i - u_j)(g_i - g_j))`.
///
/// With more than `max_pairs` ordered pairs, `max_pairs` of them are drawn
/// uniformly (with replacement) and the sum is rescaled by
/// `|B|(|B|-1) / max_pairs`, which keeps the estimator unbiased.
pub fn gradient_supervision_loss<R: RngCore>(
    u: &[f64],
    geom: &BoundaryGeometry,
    max_pairs: usize,
    rng: &mut R,
) -> GradientLoss {
    assert_eq!(u.len(), geom.distance.len(), "uncertainty map does not match geometry");
    assert_eq!(geom.gradient.len(), u.len(), "geometry has no gradient map");
    let mut grad_u = vec![0.0; u.len()];
    let b = &geom.boundary;
    let n = b.len();
    if n < 2 {
        return GradientLoss { value: 0.0, grad_u, pairs: 0, sampled: false, empty_boundary: n == 0 };
    }
    let g = &geom.gradient;
    let total_pairs = n * (n - 1);
    let mut sum = 0.0;

    if total_pairs <= max_pairs {
        let w = 2.0 / n as f64;
        for a in 0..n {
            let i = b[a];
            for &j in &b[a + 1..] {
                let dg = g[i] - g[j];
                let prod = (u[i] - u[j]) * dg;
                if prod > 0.0 {
                    sum += 2.0 * prod;
                    grad_u[i] += w * dg;
                    grad_u[j] -= w * dg;
                }
            }
        }
        return GradientLoss {
            value: sum / n as f64,
            grad_u,
            pairs: total_pairs,
            sampled: false,
            empty_boundary: false,
        };
    }

    let scale = total_pairs as f64 / max_pairs as f64;
    let w = scale / n as f64;
    for _ in 0..max_pairs {
        let (a, c) = random_ordered_pair(rng, n);
        let (i, j) = (b[a], b[c]);
        let dg = g[i] - g[j];
        let prod = (u[i] - u[j]) * dg;
        if prod > 0.0 {
            sum += prod;
            grad_u[i] += w * dg;
            grad_u[j] -= w * dg;
        }
    }
    GradientLoss { value: sum * scale / n as f64, grad_u, pairs: max_pairs, sampled: true, empty_boundary: false }
}

/// Hard pixels and the class-balanced subset drawn from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardSampleSet {
    /// `S_hard`, ascending.
    pub indices: Vec<usize>,
    /// Hard pixels per class.
    pub per_class_counts: Vec<usize>,
    /// Class-balanced subset used by the noise loss, ascending.
    pub sampled: Vec<usize>,
}

/// Draw up to `n_s` pixels per class, uniformly and without replacement,
/// from `candidates`. The result is sorted.
pub fn class_balanced_sample<R: RngCore>(
    candidates: &[usize],
    label: &LabelMap,
    n_s: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); label.classes()];
    for &i in candidates {
        by_class[label.class_of(i)].push(i);
    }
    let mut out = Vec::new();
    for pool in &by_class {
        if pool.len() <= n_s {
            out.extend_from_slice(pool);
        } else {
            out.extend(rand::seq::index::sample(rng, pool.len(), n_s).into_iter().map(|k| pool[k]));
        }
    }
    out.sort_unstable();
    out
}

/// `S_hard = {i : u1_i <= u0_i}` followed by class-balanced sampling.
pub fn detect_hard_samples<R: RngCore>(
    u0: &[f64],
    u1: &[f64],
    label: &LabelMap,
    n_s: usize,
    rng: &mut R,
) -> HardSampleSet {
    assert_eq!(u0.len(), u1.len());
    assert_eq!(u0.len(), label.len());
    let indices: Vec<usize> = (0..u0.len()).filter(|&i| u1[i] <= u0[i]).collect();
    let mut per_class_counts = vec![0; label.classes()];
    for &i in &indices {
        per_class_counts[label.class_of(i)] += 1;
    }
    let sampled = class_balanced_sample(&indices, label, n_s, rng);
    HardSampleSet { indices, per_class_counts, sampled }
}

/// Uncertainty maps of the clean image and of the two noised copies.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePassBundle {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
}

/// Noise loss with its near/far split and gradients for each pass.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLoss {
    pub value: f64,
    pub near: f64,
    pub far: f64,
    pub grad_u0: Vec<f64>,
    pub grad_u1: Vec<f64>,
    pub grad_u2: Vec<f64>,
}

/// Mean over `S` of
/// `1{d <= d0} max(0, -(mu2 - mu1)(u2 - u1)) + 1{d > d0} (u0 + u1 + u2)`.
pub fn noise_supervision_loss(
    bundle: &NoisePassBundle,
    geom: &BoundaryGeometry,
    sampled: &[usize],
    d0: f64,
) -> NoiseLoss {
    let v = bundle.u0.len();
    assert!(bundle.mu1 < bundle.mu2, "noise means must satisfy mu1 < mu2");
    assert!(bundle.u1.len() == v && bundle.u2.len() == v && geom.distance.len() == v);
    let mut out = NoiseLoss {
        value: 0.0,
        near: 0.0,
        far: 0.0,
        grad_u0: vec![0.0; v],
        grad_u1: vec![0.0; v],
        grad_u2: vec![0.0; v],
    };
    if sampled.is_empty() {
        return out;
    }
    let w = 1.0 / sampled.len() as f64;
    let dmu = bundle.mu2 - bundle.mu1;
    for &i in sampled {
        if geom.distance[i] <= d0 {
            let term = -dmu * (bundle.u2[i] - bundle.u1[i]);
            if term > 0.0 {
                out.near += term;
                out.grad_u2[i] -= w * dmu;
                out.grad_u1[i] += w * dmu;
            }
        } else {
            out.far += bundle.u0[i] + bundle.u1[i] + bundle.u2[i];
            out.grad_u0[i] += w;
            out.grad_u1[i] += w;
            out.grad_u2[i] += w;
        }
    }
    out.near *= w;
    out.far *= w;
    out.value = out.near + out.far;
    out
}

/// Seeds of the two noise draws derived from one base seed.
pub fn noise_seeds(seed: u64) -> (u64, u64) {
    let mut rng = crate::rng_from_seed(seed);
    (rng.next_u64(), rng.next_u64())
}

/// The clean image and its two noised copies `(x, x + n(mu1), x + n(mu2))`.
pub fn noised_inputs(img: &ImageSlice, cfg: &SupervisionConfig, seed: u64) -> Result<[ImageSlice; 3]> {
    let (s1, s2) = noise_seeds(seed);
    let x1 = apply_noise(img, &NoiseSpec::global(cfg.mu1, cfg.noise_stddev, s1))?;
    let x2 = apply_noise(img, &NoiseSpec::global(cfg.mu2, cfg.noise_stddev, s2))?;
    Ok([img.clone(), x1, x2])
}

/// Run the model on the clean and the two noised images and convert each
/// output to an uncertainty map.
pub fn build_noise_passes<M: EvidenceModel + ?Sized>(
    img: &ImageSlice,
    model: &M,
    cfg: &SupervisionConfig,
    seed: u64,
) -> Result<NoisePassBundle> {
    let inputs = noised_inputs(img, cfg, seed)?;
    let mut maps = Vec::with_capacity(3);
    for x in &inputs {
        let e = model.evidence(x)?;
        if e.pixels() != img.len() || e.classes() != model.classes() {
            return Err(Error::ModelShape {
                expected_v: img.len(),
                expected_k: model.classes(),
                got_v: e.pixels(),
                got_k: e.classes(),
            });
        }
        maps.push(uncertainty(&e));
    }
    let u2 = maps.pop().unwrap_or_default();
    let u1 = maps.pop().unwrap_or_default();
    let u0 = maps.pop().unwrap_or_default();
    Ok(NoisePassBundle { u0, u1, u2, mu1: cfg.mu1, mu2: cfg.mu2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom_1d(distance: Vec<f64>, gradient: Vec<f64>, boundary: Vec<usize>) -> BoundaryGeometry {
        BoundaryGeometry { height: 1, width: distance.len(), radius: 1.0, boundary, distance, gradient }
    }

    #[test]
    fn two_pixel_gradient_loss() {
        let geom = geom_1d(vec![0.0, 0.0], vec![0.9, 0.1], vec![0, 1]);
        let mut rng = crate::rng_from_seed(0);
        let l = gradient_supervision_loss(&[0.8, 0.2], &geom, 100, &mut rng);
        assert!((l.value - 0.48).abs() < 1e-15);
        let l = gradient_supervision_loss(&[0.2, 0.8], &geom, 100, &mut rng);
        assert_eq!(l.value, 0.0);
        assert!(l.grad_u.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn empty_boundary_is_signalled() {
        let geom = geom_1d(vec![f64::INFINITY; 3], vec![0.0; 3], vec![]);
        let l = gradient_supervision_loss(&[0.1, 0.2, 0.3], &geom, 10, &mut crate::rng_from_seed(0));
        assert!(l.empty_boundary);
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn subsampled_pairs_estimate_exhaustive_loss() {
        let n = 400;
        let mut rng = crate::rng_from_seed(11);
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let geom = geom_1d(vec![0.0; n], g, (0..n).collect());
        let exact = gradient_supervision_loss(&u, &geom, usize::MAX, &mut rng).value;
        let est = gradient_supervision_loss(&u, &geom, 100_000, &mut rng);
        assert!(est.sampled && est.pairs == 100_000);
        assert!((est.value - exact).abs() / exact < 0.03, "{} vs {}", est.value, exact);
    }

    #[test]
    fn hard_sample_definition() {
        let lab = LabelMap::new(8, 8, 2, vec![0; 64]).unwrap();
        let mut u0 = vec![0.9; 64];
        let mut u1 = vec![1.0; 64];
        u0[0] = 0.2;
        u1[0] = 0.1;
        u0[1] = 0.5;
        u1[1] = 0.7;
        let s = detect_hard_samples(&u0, &u1, &lab, 10, &mut crate::rng_from_seed(0));
        assert_eq!(s.indices, vec![0]);
        let u1: Vec<f64> = u0.iter().map(|u| u + 0.1).collect();
        let s = detect_hard_samples(&u0, &u1, &lab, 10, &mut crate::rng_from_seed(0));
        assert!(s.indices.is_empty() && s.sampled.is_empty());
    }

    #[test]
    fn availability_caps_per_class_draws() {
        let mut labels = vec![0u8; 64];
        for l in labels.iter_mut().skip(10).take(10) {
            *l = 1;
        }
        for l in labels.iter_mut().skip(20).take(2) {
            *l = 2;
        }
        let lab = LabelMap::new(8, 8, 3, labels).unwrap();
        // hard pixels: 0..22 (10 / 10 / 2 per class)
        let u0: Vec<f64> = (0..64).map(|i| if i < 22 { 0.5 } else { 0.1 }).collect();
        let u1: Vec<f64> = (0..64).map(|i| if i < 22 { 0.4 } else { 0.2 }).collect();
        let s = detect_hard_samples(&u0, &u1, &lab, 5, &mut crate::rng_from_seed(3));
        assert_eq!(s.per_class_counts, vec![10, 10, 2]);
        let mut per = [0; 3];
        for &i in &s.sampled {
            per[lab.class_of(i)] += 1;
            assert!(s.indices.contains(&i));
        }
        assert_eq!(per, [5, 5, 2]);
    }

    #[test]
    fn noise_loss_worked_examples() {
        let geom = geom_1d(vec![2.0, 2.0, 10.0], vec![0.0; 3], vec![]);
        let bundle = NoisePassBundle {
            u0: vec![0.3, 0.3, 0.1],
            u1: vec![0.5, 0.5, 0.2],
            u2: vec![0.4, 0.6, 0.3],
            mu1: 0.1,
            mu2: 0.3,
        };
        let near = noise_supervision_loss(&bundle, &geom, &[0], 4.0);
        assert!((near.value - 0.02).abs() < 1e-15);
        let ok = noise_supervision_loss(&bundle, &geom, &[1], 4.0);
        assert_eq!(ok.value, 0.0);
        let far = noise_supervision_loss(&bundle, &geom, &[2], 4.0);
        assert!((far.value - 0.6).abs() < 1e-15);
        let all = noise_supervision_loss(&bundle, &geom, &[0, 1, 2], 4.0);
        assert!((all.value - 0.62 / 3.0).abs() < 1e-15);
    }
}
