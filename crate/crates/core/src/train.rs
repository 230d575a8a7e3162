//! Schedules, total-loss assembly and the optimization loop.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::config::TrainConfig;
use crate::edl::{loss_seg, uncertainty, uncertainty_grad_to_evidence, SegLoss, SegWeights};
use crate::error::{Error, Result};
use crate::evidence::EvidenceMap;
use crate::geometry::BoundaryGeometry;
use crate::image::ImageSlice;
use crate::imageops::boundary_geometry;
use crate::label::{LabelMap, Sample};
use crate::nn::{Adam, UNet, UNetArch};
use crate::supervision::{
    class_balanced_sample, detect_hard_samples, gradient_supervision_loss, noise_supervision_loss, noised_inputs,
    GradientLoss, NoiseLoss, NoisePassBundle,
};
use crate::{derive_seed, rng_from_seed};

/// `alpha(t) = alpha0 * exp(-(ln alpha0 / T) t)`, rising from `alpha0` at
/// `t = 0` to 1 at `t = T`.
pub fn anneal_alpha(t: f64, total: usize, alpha0: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidConfig("T must be >= 1".into()));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("alpha0 must lie in (0, 1], got {alpha0}")));
    }
    Ok(alpha0 * libm::exp(-(libm::log(alpha0) / total as f64) * t))
}

/// Effective loss weights at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub epoch: usize,
    pub total: usize,
    pub alpha: f64,
    pub lambda_ce: f64,
    pub lambda_dice: f64,
    pub lambda_kl: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScheduleState {
    pub fn seg_weights(&self) -> SegWeights {
        SegWeights { ce: self.lambda_ce, dice: self.lambda_dice, kl: self.lambda_kl }
    }
}

/// Weights at epoch `t`: `lambda_kl = min(1, t / warmup)`,
/// `lambda_dice = 1 - alpha`, `(beta, gamma) = alpha * (beta0, gamma0)`.
pub fn schedule(t: usize, cfg: &TrainConfig) -> Result<ScheduleState> {
    let alpha = anneal_alpha(t as f64, cfg.epochs, cfg.alpha0)?;
    let (beta0, gamma0) = cfg.supervision_weights();
    Ok(ScheduleState {
        epoch: t,
        total: cfg.epochs,
        alpha,
        lambda_ce: cfg.lambda_ce,
        lambda_dice: (1.0 - alpha).max(0.0),
        lambda_kl: (t as f64 / cfg.kl_warmup_epochs).min(1.0),
        beta: beta0 * alpha,
        gamma: gamma0 * alpha,
    })
}

/// `L_seg + beta L_gu + gamma L_nu` with gradients per forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub value: f64,
    pub grad_e0: Vec<f64>,
    pub grad_e1: Option<Vec<f64>>,
    pub grad_e2: Option<Vec<f64>>,
}

/// Evidence maps of the three passes; the noised ones are only present
/// when noise supervision ran.
pub struct PassEvidence<'a> {
    pub clean: &'a EvidenceMap,
    pub noised: Option<(&'a EvidenceMap, &'a EvidenceMap)>,
}

/// Combine the component losses and chain the uncertainty gradients of the
/// supervision terms into evidence space.
pub fn total_loss(
    passes: &PassEvidence<'_>,
    seg: &SegLoss,
    gu: Option<&GradientLoss>,
    nu: Option<&NoiseLoss>,
    beta: f64,
    gamma: f64,
) -> TotalLoss {
    let mut value = seg.total.value;
    let mut grad_e0 = seg.total.grad.clone();
    let mut du0 = vec![0.0; passes.clean.pixels()];
    if let Some(gu) = gu {
        value += beta * gu.value;
        du0.iter_mut().zip(&gu.grad_u).for_each(|(d, g)| *d += beta * g);
    }
    let (mut grad_e1, mut grad_e2) = (None, None);
    if let Some(nu) = nu {
        value += gamma * nu.value;
        du0.iter_mut().zip(&nu.grad_u0).for_each(|(d, g)| *d += gamma * g);
        let (e1, e2) = passes.noised.expect("noise loss needs the noised passes");
        let scaled = |g: &[f64]| g.iter().map(|x| gamma * x).collect::<Vec<f64>>();
        grad_e1 = Some(uncertainty_grad_to_evidence(e1, &scaled(&nu.grad_u1)));
        grad_e2 = Some(uncertainty_grad_to_evidence(e2, &scaled(&nu.grad_u2)));
    }
    let chain = uncertainty_grad_to_evidence(passes.clean, &du0);
    grad_e0.iter_mut().zip(&chain).for_each(|(a, b)| *a += b);
    TotalLoss { value, grad_e0, grad_e1, grad_e2 }
}

/// A training sample with its boundary geometry precomputed.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub image: ImageSlice,
    pub label: LabelMap,
    pub geometry: BoundaryGeometry,
}

impl PreparedSample {
    pub fn new(sample: Sample, cfg: &TrainConfig) -> Self {
        let s = &cfg.supervision;
        let geometry = boundary_geometry(&sample.image, &sample.label, s.boundary_radius, s.gradient_sigma);
        Self { image: sample.image, label: sample.label, geometry }
    }
}

/// Per-sample loss components (unweighted) and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepLosses {
    pub ce: f64,
    pub dice: f64,
    pub kl: f64,
    pub gu: Option<f64>,
    pub nu: Option<f64>,
    pub total: f64,
    pub hard: usize,
    pub sampled: usize,
}

/// Forward, losses and backward for one sample. Parameter gradients are
/// scaled by `grad_scale` and accumulated into `grads`.
#[allow(clippy::too_many_arguments)]
pub fn sample_step(
    net: &UNet,
    sample: &PreparedSample,
    cfg: &TrainConfig,
    sched: &ScheduleState,
    seed: u64,
    grads: &mut [f32],
    grad_scale: f64,
) -> Result<StepLosses> {
    let mut rng = rng_from_seed(seed);
    let (e0, c0) = net.evidence_with_cache(&sample.image)?;
    let seg = loss_seg(&e0, &sample.label, sched.seg_weights(), cfg.dice_include_background);
    let u0 = uncertainty(&e0);
    let gu = cfg.use_gu.then(|| gradient_supervision_loss(&u0, &sample.geometry, cfg.supervision.max_pairs, &mut rng));

    let mut out =
        StepLosses { ce: seg.ce, dice: seg.dice, kl: seg.kl, gu: gu.as_ref().map(|g| g.value), ..Default::default() };

    let noised = if cfg.use_nu {
        let [_, x1, x2] = noised_inputs(&sample.image, &cfg.supervision, derive_seed(seed, &[1]))?;
        let (e1, c1) = net.evidence_with_cache(&x1)?;
        let (e2, c2) = net.evidence_with_cache(&x2)?;
        let bundle = NoisePassBundle {
            u0: u0.clone(),
            u1: uncertainty(&e1),
            u2: uncertainty(&e2),
            mu1: cfg.supervision.mu1,
            mu2: cfg.supervision.mu2,
        };
        let n_s = cfg.supervision.samples_per_class;
        let sampled = if cfg.use_hsd {
            let hard = detect_hard_samples(&bundle.u0, &bundle.u1, &sample.label, n_s, &mut rng);
            out.hard = hard.indices.len();
            hard.sampled
        } else {
            let all: Vec<usize> = (0..sample.label.len()).collect();
            out.hard = all.len();
            class_balanced_sample(&all, &sample.label, n_s, &mut rng)
        };
        out.sampled = sampled.len();
        let nu = noise_supervision_loss(&bundle, &sample.geometry, &sampled, cfg.supervision.d0);
        Some((e1, c1, e2, c2, nu))
    } else {
        None
    };

    let passes = PassEvidence { clean: &e0, noised: noised.as_ref().map(|(e1, _, e2, _, _)| (e1, e2)) };
    let total = total_loss(&passes, &seg, gu.as_ref(), noised.as_ref().map(|n| &n.4), sched.beta, sched.gamma);
    out.nu = noised.as_ref().map(|n| n.4.value);
    out.total = total.value;
    if !total.value.is_finite() {
        return Ok(out);
    }

    let scale = |g: Vec<f64>| g.into_iter().map(|x| x * grad_scale).collect::<Vec<f64>>();
    net.backward_evidence_grad(&c0, &scale(total.grad_e0), grads);
    if let Some((_, c1, _, c2, _)) = &noised {
        if sched.gamma > 0.0 {
            if let Some(g1) = total.grad_e1 {
                net.backward_evidence_grad(c1, &scale(g1), grads);
            }
            if let Some(g2) = total.grad_e2 {
                net.backward_evidence_grad(c2, &scale(g2), grads);
            }
        }
    }
    Ok(out)
}

/// Mean of the per-sample losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochLosses {
    pub epoch: usize,
    pub ce: f64,
    pub dice: f64,
    pub kl: f64,
    pub gu: Option<f64>,
    pub nu: Option<f64>,
    pub total: f64,
}

/// Raised when the total loss stops being finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub epoch: usize,
    pub batch: usize,
    pub samples: Vec<usize>,
}

/// Model, optimizer and configuration of one run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainConfig,
    pub net: UNet,
    pub opt: Adam,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = UNetArch::new(cfg.base_channels, 3, cfg.classes);
        let net = UNet::new(arch, derive_seed(cfg.seed, &[0x1417]));
        let opt = Adam::new(arch.param_count(), cfg.lr as f32);
        Ok(Self { cfg, net, opt })
    }

    /// One pass over `data` in a seeded shuffled order, with epochs counted
    /// from 1 so the final epoch runs at `alpha = 1`.
    pub fn run_epoch(
        &mut self,
        data: &[PreparedSample],
        epoch: usize,
    ) -> Result<core::result::Result<EpochLosses, Divergence>> {
        let sched = schedule(epoch, &self.cfg)?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng_from_seed(derive_seed(self.cfg.seed, &[0xe0, epoch as u64])));
        let mut sums = StepLosses::default();
        let (mut gu_sum, mut nu_sum) = (0.0, 0.0);
        let mut grads = vec![0.0f32; self.net.params().len()];
        for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_total = 0.0;
            for &idx in batch {
                let seed = derive_seed(self.cfg.seed, &[0x57e9, epoch as u64, idx as u64]);
                let s = sample_step(&self.net, &data[idx], &self.cfg, &sched, seed, &mut grads, scale)?;
                batch_total += s.total;
                sums.ce += s.ce;
                sums.dice += s.dice;
                sums.kl += s.kl;
                sums.total += s.total;
                gu_sum += s.gu.unwrap_or(0.0);
                nu_sum += s.nu.unwrap_or(0.0);
            }
            if !batch_total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Ok(Err(Divergence { epoch, batch: b, samples: batch.to_vec() }));
            }
            self.opt.update(self.net.params_mut(), &grads);
        }
        let n = data.len().max(1) as f64;
        Ok(Ok(EpochLosses {
            epoch,
            ce: sums.ce / n,
            dice: sums.dice / n,
            kl: sums.kl / n,
            gu: self.cfg.use_gu.then_some(gu_sum / n),
            nu: self.cfg.use_nu.then_some(nu_sum / n),
            total: sums.total / n,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_endpoints_and_midpoint() {
        assert!((anneal_alpha(0.0, 50, 0.01).unwrap() - 0.01).abs() < 1e-15);
        assert!((anneal_alpha(50.0, 50, 0.01).unwrap() - 1.0).abs() < 1e-9);
        assert!((anneal_alpha(25.0, 50, 0.01).unwrap() - 0.1).abs() < 1e-12);
        assert!(anneal_alpha(1.0, 0, 0.01).is_err());
    }

    #[test]
    fn schedule_profiles() {
        let mut cfg = TrainConfig { epochs: 40, ..Default::default() };
        assert_eq!(schedule(10, &cfg).unwrap().lambda_kl, 0.5);
        assert_eq!(schedule(20, &cfg).unwrap().lambda_kl, 1.0);
        assert_eq!(schedule(35, &cfg).unwrap().lambda_kl, 1.0);
        let end = schedule(40, &cfg).unwrap();
        assert!(end.lambda_dice.abs() < 1e-9);
        assert!((end.beta - 0.1).abs() < 1e-9 && (end.gamma - 10.0).abs() < 1e-8);
        cfg.profile = crate::config::Profile::Refuge;
        let end = schedule(40, &cfg).unwrap();
        assert!((end.beta - 1.0).abs() < 1e-9 && (end.gamma - 1.0).abs() < 1e-9);
    }

    #[test]
    fn total_loss_arithmetic() {
        let e = EvidenceMap::zeros(1, 2);
        let seg =
            SegLoss { ce: 0.0, dice: 0.0, kl: 0.0, total: crate::edl::LossGrad { value: 1.0, grad: vec![0.0; 2] } };
        let gu = GradientLoss { value: 0.5, grad_u: vec![0.0], pairs: 0, sampled: false, empty_boundary: false };
        let nu =
            NoiseLoss { value: 0.2, near: 0.0, far: 0.2, grad_u0: vec![0.0], grad_u1: vec![0.0], grad_u2: vec![0.0] };
        let passes = PassEvidence { clean: &e, noised: Some((&e, &e)) };
        let t = total_loss(&passes, &seg, Some(&gu), Some(&nu), 0.1, 10.0);
        assert!((t.value - 3.05).abs() < 1e-12);
        let base = total_loss(&passes, &seg, Some(&gu), Some(&nu), 0.0, 0.0);
        assert_eq!(base.value, seg.total.value);
    }
}
