//! Checkpoint directory: `manifest.json` plus `params.f32`, the flat
//! parameter vector as little-endian float32.

use std::path::Path;

use evsup_core::nn::{UNet, UNetArch};
use evsup_core::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};
use crate::fsutil::{create_dir, f32_from_le, f32_le_bytes, read, read_json, write, write_json};

pub const MANIFEST: &str = "manifest.json";
pub const PARAMS: &str = "params.f32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub architecture: String,
    /// SHA-256 of `architecture`, hex.
    pub architecture_hash: String,
    pub arch: UNetArch,
    pub param_count: usize,
    /// SHA-256 of `params.f32`, hex.
    pub params_sha256: String,
    pub epoch: usize,
    pub seed: u64,
    pub config: TrainConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save(dir: &Path, net: &UNet, epoch: usize, config: &TrainConfig) -> AppResult<Manifest> {
    create_dir(dir)?;
    let arch = net.arch();
    let blob = f32_le_bytes(net.params().iter().copied());
    let architecture = arch.describe();
    let manifest = Manifest {
        architecture_hash: sha256_hex(architecture.as_bytes()),
        architecture,
        arch,
        param_count: net.params().len(),
        params_sha256: sha256_hex(&blob),
        epoch,
        seed: config.seed,
        config: config.clone(),
    };
    write(&dir.join(PARAMS), blob)?;
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load(dir: &Path) -> AppResult<(UNet, Manifest)> {
    let mpath = dir.join(MANIFEST);
    if !mpath.is_file() {
        return Err(AppError::Missing(mpath));
    }
    let manifest: Manifest = read_json(&mpath)?;
    let a = manifest.arch;
    if a.levels == 0 || a.base_channels == 0 || a.classes < 2 {
        return Err(AppError::format(&mpath, format!("invalid architecture {a:?}")));
    }
    let ppath = dir.join(PARAMS);
    let blob = read(&ppath)?;
    if sha256_hex(manifest.arch.describe().as_bytes()) != manifest.architecture_hash {
        return Err(AppError::format(&mpath, "architecture hash does not match the recorded architecture"));
    }
    if sha256_hex(&blob) != manifest.params_sha256 {
        return Err(AppError::format(&ppath, "parameter checksum mismatch"));
    }
    let params = f32_from_le(&ppath, &blob)?;
    let net = UNet::from_params(manifest.arch, params).map_err(|e| AppError::format(&ppath, e))?;
    Ok((net, manifest))
}
