use alloc::format;
use alloc::string::String;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[row0, row0 + height) x [col0, col0 + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchBox {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl PatchBox {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row0 && row < self.row0 + self.height && col >= self.col0 && col < self.col0 + self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Global,
    Patch(PatchBox),
}

/// Additive Gaussian noise `N(mean, stddev^2)`, clamped back into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: f64,
    pub stddev: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn global(mean: f64, stddev: f64, seed: u64) -> Self {
        Self { mean, stddev, mode: NoiseMode::Global, seed }
    }

    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        if !(self.stddev >= 0.0 && self.stddev.is_finite()) || !self.mean.is_finite() {
            return Err(Error::InvalidConfig(format!("noise mean {} / stddev {} invalid", self.mean, self.stddev)));
        }
        if let NoiseMode::Patch(b) = self.mode {
            if b.height == 0 || b.width == 0 || b.row0 + b.height > height || b.col0 + b.width > width {
                return Err(Error::InvalidConfig(format!("patch {b:?} outside {height}x{width} image")));
            }
        }
        Ok(())
    }
}

/// Weight profile for the supervision terms over training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `beta = 0.1 alpha`, `gamma = 10 alpha`.
    Acdc,
    /// `beta = gamma = alpha`.
    Refuge,
}

impl Profile {
    /// Default `(beta0, gamma0)` multipliers of the annealing factor.
    pub fn weights(self) -> (f64, f64) {
        match self {
            Profile::Acdc => (0.1, 10.0),
            Profile::Refuge => (1.0, 1.0),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "acdc" | "acdc-like" => Ok(Profile::Acdc),
            "refuge" | "refuge-like" => Ok(Profile::Refuge),
            other => Err(Error::InvalidConfig(format!("unknown profile `{other}`"))),
        }
    }
}

/// Hyperparameters of the two uncertainty supervision losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisionConfig {
    /// Near/far distance threshold `d0` in pixels.
    pub d0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub noise_stddev: f64,
    /// Overrides the profile's beta multiplier when set.
    pub beta0: Option<f64>,
    /// Overrides the profile's gamma multiplier when set.
    pub gamma0: Option<f64>,
    /// Hard pixels drawn per class, `n_s`.
    pub samples_per_class: usize,
    /// Cap on enumerated ordered pairs in the gradient loss.
    pub max_pairs: usize,
    /// Boundary set radius (pixels).
    pub boundary_radius: f64,
    /// Gaussian sigma used before taking image gradients.
    pub gradient_sigma: f64,
}

impl Default for SupervisionConfig {
    fn default() -> Self {
        Self {
            d0: 4.0,
            mu1: 0.1,
            mu2: 0.3,
            noise_stddev: 0.05,
            beta0: None,
            gamma0: None,
            samples_per_class: 64,
            max_pairs: 200_000,
            boundary_radius: 1.0,
            gradient_sigma: 1.0,
        }
    }
}

impl SupervisionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.d0 > 0.0) {
            return bad(format!("d0 must be positive, got {}", self.d0));
        }
        if !(0.0 <= self.mu1 && self.mu1 < self.mu2) {
            return bad(format!("need 0 <= mu1 < mu2, got {} / {}", self.mu1, self.mu2));
        }
        if !(self.noise_stddev >= 0.0) {
            return bad(format!("noise_stddev must be >= 0, got {}", self.noise_stddev));
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be >= 1".into());
        }
        if self.max_pairs == 0 {
            return bad("max_pairs must be >= 1".into());
        }
        if !(self.boundary_radius >= 0.0) || !(self.gradient_sigma >= 0.0) {
            return bad("boundary_radius and gradient_sigma must be >= 0".into());
        }
        for w in [self.beta0, self.gamma0].into_iter().flatten() {
            if !(w >= 0.0) {
                return bad(format!("supervision weights must be >= 0, got {w}"));
            }
        }
        Ok(())
    }
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(rename = "K")]
    pub classes: usize,
    #[serde(rename = "T")]
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub alpha0: f64,
    pub lambda_ce: f64,
    pub kl_warmup_epochs: f64,
    pub seed: u64,
    pub profile: Profile,
    /// Gradient-based supervision switch.
    pub use_gu: bool,
    /// Noise-based supervision switch.
    pub use_nu: bool,
    /// Hard-sample detection switch; when off, noise supervision samples
    /// class-balanced pixels without the hardness filter.
    pub use_hsd: bool,
    /// Dice averages over every class instead of foreground only.
    pub dice_include_background: bool,
    /// U-Net width at full resolution.
    pub base_channels: usize,
    pub data_dir: Option<String>,
    #[serde(flatten)]
    pub supervision: SupervisionConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            epochs: 50,
            lr: 1e-2,
            batch_size: 8,
            alpha0: 0.01,
            lambda_ce: 1.0,
            kl_warmup_epochs: 20.0,
            seed: 7,
            profile: Profile::Acdc,
            use_gu: true,
            use_nu: true,
            use_hsd: true,
            dice_include_background: false,
            base_channels: 8,
            data_dir: None,
            supervision: SupervisionConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.classes < 2 {
            return Err(Error::TooFewClasses(self.classes));
        }
        if self.epochs == 0 {
            return bad("T must be >= 1".into());
        }
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad(format!("alpha0 must lie in (0, 1], got {}", self.alpha0));
        }
        if self.batch_size == 0 || self.base_channels == 0 {
            return bad("batch_size and base_channels must be >= 1".into());
        }
        if !(self.lambda_ce >= 0.0) || !(self.kl_warmup_epochs > 0.0) {
            return bad("lambda_ce must be >= 0 and kl_warmup_epochs > 0".into());
        }
        if self.seed > i64::MAX as u64 {
            // config snapshots are TOML, whose integers are signed 64-bit
            return bad(format!("seed must be <= {}, got {}", i64::MAX, self.seed));
        }
        self.supervision.validate()
    }

    /// Effective `(beta0, gamma0)` after profile defaults, overrides and the
    /// ablation switches.
    pub fn supervision_weights(&self) -> (f64, f64) {
        let (pb, pg) = self.profile.weights();
        let beta = if self.use_gu { self.supervision.beta0.unwrap_or(pb) } else { 0.0 };
        let gamma = if self.use_nu { self.supervision.gamma0.unwrap_or(pg) } else { 0.0 };
        (beta, gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inverted_noise_means() {
        let cfg = SupervisionConfig { mu1: 0.3, mu2: 0.1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ablation_switch_zeroes_weight() {
        let mut cfg = TrainConfig::default();
        cfg.supervision.gamma0 = Some(5.0);
        cfg.use_nu = false;
        assert_eq!(cfg.supervision_weights(), (0.1, 0.0));
    }

    #[test]
    fn patch_must_fit() {
        let spec = NoiseSpec {
            mean: 0.1,
            stddev: 0.0,
            mode: NoiseMode::Patch(PatchBox { row0: 60, col0: 0, height: 8, width: 8 }),
            seed: 0,
        };
        assert!(spec.validate(64, 64).is_err());
        assert!(spec.validate(68, 64).is_ok());
    }
}
