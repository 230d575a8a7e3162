//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evsup_core::synth::SceneSpec;
use evsup_core::{Profile, TrainConfig};

use crate::compare::compare_runs;
use crate::dataset::build_dataset;
use crate::error::{AppError, AppResult};
use crate::run::{config_from_toml, evaluate_run, train_run, EvalRequest, EVAL_DIR};

#[derive(Debug, Parser)]
#[command(name = "evsup", version, about = "Evidential segmentation with uncertainty supervision")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenerateData(GenerateArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint, with a noise sweep.
    Evaluate(EvaluateArgs),
    /// Compare evaluated runs.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub train: usize,
    #[arg(long, default_value_t = 20)]
    pub val: usize,
    #[arg(long, default_value_t = 50)]
    pub test: usize,
    /// Side length in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub blur_min: Option<f64>,
    #[arg(long)]
    pub blur_max: Option<f64>,
    #[arg(long)]
    pub texture: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory; must be absent or empty.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with configuration keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub base_channels: Option<usize>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Disable gradient-based uncertainty supervision.
    #[arg(long)]
    pub no_gu: bool,
    /// Disable noise-based uncertainty supervision.
    #[arg(long)]
    pub no_nu: bool,
    /// Disable hard-sample detection.
    #[arg(long)]
    pub no_hsd: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run directory or checkpoint directory.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Comma-separated noise means, ascending.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    /// Report directory (default: `<checkpoint>/eval`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write uncertainty and noise-difference maps as PGM.
    #[arg(long)]
    pub dump_maps: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Evaluated run directories.
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).map_err(|e| e.to_string())
}

/// Merge config file and flags; returns the config and any warnings.
pub fn train_config(args: &TrainArgs) -> AppResult<(TrainConfig, Vec<String>)> {
    let mut cfg = match &args.config {
        Some(p) => config_from_toml(p)?,
        None => TrainConfig::default(),
    };
    let mut warnings = Vec::new();
    if let Some(v) = args.profile {
        cfg.profile = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.base_channels {
        cfg.base_channels = v;
    }
    if let Some(v) = args.beta0 {
        cfg.supervision.beta0 = Some(v);
    }
    if let Some(v) = args.gamma0 {
        cfg.supervision.gamma0 = Some(v);
    }
    cfg.use_gu &= !args.no_gu;
    cfg.use_nu &= !args.no_nu;
    cfg.use_hsd &= !args.no_hsd;
    if !cfg.use_gu && cfg.supervision.beta0.is_some_and(|b| b > 0.0) {
        warnings.push("gradient supervision disabled; beta forced to 0".to_string());
    }
    if !cfg.use_nu && cfg.supervision.gamma0.is_some_and(|g| g > 0.0) {
        warnings.push("noise supervision disabled; gamma forced to 0".to_string());
    }
    cfg.validate()?;
    Ok((cfg, warnings))
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::GenerateData(a) => {
            let d = SceneSpec::default();
            let spec = SceneSpec {
                height: a.size,
                width: a.size,
                classes: a.classes,
                blur_min: a.blur_min.unwrap_or(d.blur_min),
                blur_max: a.blur_max.unwrap_or(d.blur_max),
                texture: a.texture.unwrap_or(d.texture),
                ..d
            };
            build_dataset(&a.out, [a.train, a.val, a.test], &spec, a.seed)?;
            eprintln!("wrote {} samples to {}", a.train + a.val + a.test, a.out.display());
        }
        Command::Train(a) => {
            let (cfg, warnings) = train_config(&a)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            train_run(&cfg, &a.data, &a.out, |line| eprintln!("{line}"))?;
        }
        Command::Evaluate(a) => {
            let out = a.out.clone().unwrap_or_else(|| a.checkpoint.join(EVAL_DIR));
            let req = EvalRequest {
                checkpoint: a.checkpoint,
                data: a.data,
                split: a.split,
                sweep: a.sweep,
                out: out.clone(),
                dump_maps: a.dump_maps,
            };
            let r = evaluate_run(&req)?.aggregate;
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            eprintln!(
                "DSC {:.4} HD95 {} ECE {:.4} UEO {:.4} UCC_g {} UCC_mu {} UR_g {} UR_mu {} -> {}",
                r.dsc,
                show(r.hd95),
                r.ece,
                r.ueo,
                show(r.ucc_g),
                show(r.ucc_mu),
                show(r.ur_g),
                show(r.ur_mu),
                out.display()
            );
        }
        Command::Compare(a) => {
            if a.runs.len() < 2 {
                return Err(AppError::Usage("compare needs at least two evaluated runs".into()));
            }
            let cmp = compare_runs(&a.runs, &a.out)?;
            print!("{}", cmp.markdown);
        }
    }
    Ok(())
}
