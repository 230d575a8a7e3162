//! Train and evaluate drivers over on-disk datasets and run directories.
//!
//! A run directory holds `config.toml` (effective configuration),
//! `epoch_log.csv` and `checkpoint/` (latest epoch, rewritten every epoch).
//! Evaluation writes `metrics.csv`, `levels.csv`, `deltas.csv` and,
//! optionally, `maps/`.

use std::path::{Path, PathBuf};

use evsup_core::eval::{evaluate, EvalOptions, EvalOutput};
use evsup_core::label::Sample;
use evsup_core::metrics::dsc;
use evsup_core::nn::{EvidenceModel, UNet, UNetArch};
use evsup_core::train::{PreparedSample, Trainer};
use evsup_core::{LabelMap, TrainConfig};

use crate::checkpoint;
use crate::dataset::read_split;
use crate::error::{AppError, AppResult};
use crate::fsutil::{create_dir, ensure_empty_dir, write};
use crate::maps::dump_maps;
use crate::reports::{write_deltas, write_epoch_log, write_levels, write_metrics, EpochRow};

pub const CONFIG_FILE: &str = "config.toml";
pub const EPOCH_LOG: &str = "epoch_log.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const METRICS_FILE: &str = "metrics.csv";
pub const LEVELS_FILE: &str = "levels.csv";
pub const DELTAS_FILE: &str = "deltas.csv";
pub const MAPS_DIR: &str = "maps";
pub const EVAL_DIR: &str = "eval";

pub fn config_to_toml(cfg: &TrainConfig) -> AppResult<String> {
    toml::to_string(cfg).map_err(|e| AppError::Usage(format!("config not representable as TOML: {e}")))
}

pub fn config_from_toml(path: &Path) -> AppResult<TrainConfig> {
    let text = crate::fsutil::read_string(path)?;
    toml::from_str(&text).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))
}

fn prepare(samples: Vec<(String, Sample)>, cfg: &TrainConfig) -> (Vec<String>, Vec<PreparedSample>) {
    samples.into_iter().map(|(id, s)| (id, PreparedSample::new(s, cfg))).unzip()
}

fn check_compatible(cfg: &TrainConfig, samples: &[PreparedSample], split: &str) -> AppResult<()> {
    let l = &samples[0].label;
    if l.classes() != cfg.classes {
        return Err(AppError::Usage(format!(
            "config K = {} but the {split} split has K = {}",
            cfg.classes,
            l.classes()
        )));
    }
    let m = UNetArch::new(cfg.base_channels, 3, cfg.classes).size_multiple();
    if !l.height().is_multiple_of(m) || !l.width().is_multiple_of(m) {
        return Err(AppError::Usage(format!("image sides must be multiples of {m}, got {}x{}", l.height(), l.width())));
    }
    Ok(())
}

/// Mean per-image DSC of `model` on `samples`.
pub fn mean_dsc<M: EvidenceModel + ?Sized>(model: &M, samples: &[PreparedSample]) -> AppResult<f64> {
    let mut sum = 0.0;
    for s in samples {
        let e = model.evidence(&s.image)?;
        let pred = LabelMap::new(s.label.height(), s.label.width(), model.classes(), e.predicted_labels())?;
        sum += dsc(&pred, &s.label).mean;
    }
    Ok(sum / samples.len().max(1) as f64)
}

/// Train on `<data>/train`, validating on `<data>/val`, into an empty `out`.
/// `progress` receives one line per epoch.
pub fn train_run(
    cfg: &TrainConfig,
    data: &Path,
    out: &Path,
    mut progress: impl FnMut(&str),
) -> AppResult<Vec<EpochRow>> {
    cfg.validate()?;
    let (_, train) = prepare(read_split(data, "train")?, cfg);
    let (_, val) = prepare(read_split(data, "val")?, cfg);
    check_compatible(cfg, &train, "train")?;
    check_compatible(cfg, &val, "val")?;
    ensure_empty_dir(out)?;
    let mut snapshot = cfg.clone();
    snapshot.data_dir = Some(data.display().to_string());
    write(&out.join(CONFIG_FILE), config_to_toml(&snapshot)?)?;

    let mut trainer = Trainer::new(cfg.clone())?;
    let mut rows = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        match trainer.run_epoch(&train, epoch)? {
            Ok(losses) => {
                let row = EpochRow { losses, val_dsc: mean_dsc(&trainer.net, &val)? };
                progress(&format!(
                    "epoch {epoch}/{}: L_total {:.5} val DSC {:.4}",
                    cfg.epochs, losses.total, row.val_dsc
                ));
                rows.push(row);
                write_epoch_log(&out.join(EPOCH_LOG), &rows)?;
                checkpoint::save(&out.join(CHECKPOINT_DIR), &trainer.net, epoch, cfg)?;
            }
            Err(d) => {
                return Err(AppError::Numerical(format!(
                    "non-finite loss at epoch {}, batch {} (train samples {:?})",
                    d.epoch, d.batch, d.samples
                )))
            }
        }
    }
    Ok(rows)
}

/// Accepts a run directory or a checkpoint directory.
pub fn resolve_checkpoint(path: &Path) -> AppResult<PathBuf> {
    for candidate in [path.join(CHECKPOINT_DIR), path.to_path_buf()] {
        if candidate.join(checkpoint::MANIFEST).is_file() {
            return Ok(candidate);
        }
    }
    Err(AppError::Missing(path.join(CHECKPOINT_DIR).join(checkpoint::MANIFEST)))
}

#[derive(Debug, Clone)]
pub struct EvalRequest {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub split: String,
    pub sweep: Option<Vec<f64>>,
    pub out: PathBuf,
    pub dump_maps: bool,
}

/// Evaluate a checkpoint on one split and write the report files into
/// `out`, replacing earlier reports there.
pub fn evaluate_run(req: &EvalRequest) -> AppResult<EvalOutput> {
    let (net, manifest) = checkpoint::load(&resolve_checkpoint(&req.checkpoint)?)?;
    let cfg = manifest.config;
    let (ids, samples) = prepare(read_split(&req.data, &req.split)?, &cfg);
    check_compatible(&cfg, &samples, &req.split)?;
    let mut opts = EvalOptions::from_config(&cfg);
    if let Some(sweep) = &req.sweep {
        opts.sweep = sweep.clone();
    }
    let out = evaluate_model(&net, &samples, &opts)?;
    create_dir(&req.out)?;
    let per_image: Vec<(String, _)> = ids.iter().cloned().zip(out.per_image.iter().cloned()).collect();
    write_metrics(&req.out.join(METRICS_FILE), &per_image, &out.aggregate)?;
    write_levels(&req.out.join(LEVELS_FILE), &out.levels)?;
    write_deltas(&req.out.join(DELTAS_FILE), &out.deltas)?;
    if req.dump_maps {
        let dir = req.out.join(MAPS_DIR);
        create_dir(&dir)?;
        for (i, (id, s)) in ids.iter().zip(&samples).enumerate() {
            dump_maps(&dir, id, &net, s, i, &opts)?;
        }
    }
    Ok(out)
}

pub fn evaluate_model(net: &UNet, samples: &[PreparedSample], opts: &EvalOptions) -> AppResult<EvalOutput> {
    for &mu in &opts.sweep {
        if !mu.is_finite() {
            return Err(AppError::Usage(format!("sweep level {mu} is not finite")));
        }
    }
    if opts.sweep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AppError::Usage("sweep levels must be strictly ascending".into()));
    }
    Ok(evaluate(net, samples, opts)?)
}
