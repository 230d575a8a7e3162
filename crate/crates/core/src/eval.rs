//! Evaluation protocol: clean-image metrics plus a noise-level sweep.

use alloc::format;
use alloc::vec::Vec;

use crate::config::{NoiseSpec, TrainConfig};
use crate::edl::uncertainty;
use crate::error::Result;
use crate::imageops::apply_noise;
use crate::label::LabelMap;
use crate::metrics::{
    dsc, ece, hd95, robustness_deltas, ucc_gradient, ucc_noise, ueo, ur_gradient, ur_noise, LevelScore, NoiseLevelMap,
    ScoreDelta, DEFAULT_ECE_BINS, DEFAULT_SWEEP, DEFAULT_UEO_STEP,
};
use crate::nn::EvidenceModel;
use crate::report::MetricsReport;
use crate::train::PreparedSample;
use crate::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Noise means of the sweep, ascending.
    pub sweep: Vec<f64>,
    pub noise_stddev: f64,
    pub d0: f64,
    pub max_pairs: usize,
    pub ece_bins: usize,
    pub ueo_step: f64,
    pub seed: u64,
}

impl EvalOptions {
    pub fn from_config(cfg: &TrainConfig) -> Self {
        Self {
            sweep: DEFAULT_SWEEP.to_vec(),
            noise_stddev: cfg.supervision.noise_stddev,
            d0: cfg.supervision.d0,
            max_pairs: cfg.supervision.max_pairs,
            ece_bins: DEFAULT_ECE_BINS,
            ueo_step: DEFAULT_UEO_STEP,
            seed: cfg.seed,
        }
    }
}

/// Metrics of one image plus its per-level sweep scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEval {
    pub report: MetricsReport,
    pub levels: Vec<LevelScore>,
}

/// Per-image and split-level results.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub per_image: Vec<MetricsReport>,
    pub aggregate: MetricsReport,
    /// DSC / ECE per sweep level, averaged over images.
    pub levels: Vec<LevelScore>,
    pub deltas: Vec<ScoreDelta>,
}

/// Noise spec of sweep level `level` for image `index`.
pub fn sweep_noise(opts: &EvalOptions, index: usize, level: usize) -> NoiseSpec {
    NoiseSpec::global(
        opts.sweep[level],
        opts.noise_stddev,
        derive_seed(opts.seed, &[0x5eed, index as u64, level as u64]),
    )
}

pub fn evaluate_sample<M: EvidenceModel + ?Sized>(
    model: &M,
    sample: &PreparedSample,
    index: usize,
    opts: &EvalOptions,
) -> Result<ImageEval> {
    let truth = &sample.label;
    let geom = &sample.geometry;
    let k = model.classes();
    let e = model.evidence(&sample.image)?;
    let probs = e.expected_probs();
    let pred = LabelMap::new(truth.height(), truth.width(), k, e.predicted_labels())?;
    let u = uncertainty(&e);

    let mut report = MetricsReport::default();
    let d = dsc(&pred, truth);
    report.dsc = d.mean;
    report.dsc_per_class = d.per_class;
    let h = hd95(&pred, truth);
    report.hd95 = h.mean;
    if !h.skipped.is_empty() {
        report.flags.push(format!("hd95 skipped classes {:?}", h.skipped));
    }
    report.ece = ece(&probs, k, truth, opts.ece_bins);
    let ue = ueo(&u, &pred, truth, opts.ueo_step);
    report.ueo = ue.value;
    if ue.empty_convention {
        report.flags.push("ueo from empty-empty convention".into());
    }
    match ucc_gradient(&u, geom) {
        Ok(v) => report.ucc_g = Some(v),
        Err(err) => report.flags.push(format!("ucc_g: {err}")),
    }
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[0x9a12, index as u64]));
    if let Some(r) = ur_gradient(&u, geom, opts.max_pairs, &mut rng) {
        report.ur_g = Some(r.ratio);
        report.ur_g_ties = Some(r.ties);
    }

    let mut level_maps = Vec::with_capacity(opts.sweep.len());
    let mut levels = Vec::with_capacity(opts.sweep.len());
    for (l, &mu) in opts.sweep.iter().enumerate() {
        let noisy = apply_noise(&sample.image, &sweep_noise(opts, index, l))?;
        let en = model.evidence(&noisy)?;
        let pn = LabelMap::new(truth.height(), truth.width(), k, en.predicted_labels())?;
        levels.push(LevelScore {
            mu,
            dsc: dsc(&pn, truth).mean,
            ece: ece(&en.expected_probs(), k, truth, opts.ece_bins),
        });
        level_maps.push(uncertainty(&en));
    }
    let sweep: Vec<NoiseLevelMap<'_>> = opts.sweep.iter().copied().zip(level_maps.iter().map(Vec::as_slice)).collect();
    match ucc_noise(&sweep, geom, opts.d0) {
        Ok(v) => report.ucc_mu = Some(v),
        Err(err) => report.flags.push(format!("ucc_mu: {err}")),
    }
    report.ur_mu = ur_noise(&sweep, geom, opts.d0).map(|r| r.ratio);
    Ok(ImageEval { report, levels })
}

/// Evaluate every sample and average per-image values over the split.
pub fn evaluate<M: EvidenceModel + ?Sized>(
    model: &M,
    samples: &[PreparedSample],
    opts: &EvalOptions,
) -> Result<EvalOutput> {
    let mut per_image = Vec::with_capacity(samples.len());
    let mut level_sums: Vec<LevelScore> = opts.sweep.iter().map(|&mu| LevelScore { mu, dsc: 0.0, ece: 0.0 }).collect();
    for (i, s) in samples.iter().enumerate() {
        let ev = evaluate_sample(model, s, i, opts)?;
        for (acc, l) in level_sums.iter_mut().zip(&ev.levels) {
            acc.dsc += l.dsc;
            acc.ece += l.ece;
        }
        per_image.push(ev.report);
    }
    let n = samples.len().max(1) as f64;
    let levels: Vec<LevelScore> =
        level_sums.into_iter().map(|l| LevelScore { mu: l.mu, dsc: l.dsc / n, ece: l.ece / n }).collect();
    let deltas = robustness_deltas(&levels);
    let mut aggregate = MetricsReport::average(&per_image);
    if deltas.is_empty() {
        aggregate.flags.push("robustness deltas need at least two sweep levels".into());
    }
    Ok(EvalOutput { per_image, aggregate, levels, deltas })
}
