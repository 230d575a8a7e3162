//! On-disk dataset layout.
//!
//! ```text
//! <root>/{train,val,test}/<id>.image.f32       H*W little-endian float32, row-major
//! <root>/{train,val,test}/<id>.label.u8        H*W uint8 class indices, row-major
//! <root>/{train,val,test}/<id>.meta.json       {"height","width","K","normalization"}
//! <root>/{train,val,test}/<id>.provenance.json generator record (synthetic data only)
//! <root>/dataset.json                          generation parameters
//! ```
//!
//! Sample ids are zero-padded indices (`00000`, `00001`, ...); a split is
//! read in lexicographic id order.

use std::path::{Path, PathBuf};

use evsup_core::label::Sample;
use evsup_core::synth::{generate_scene, Provenance, SceneSpec};
use evsup_core::{derive_seed, ImageSlice, LabelMap};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::fsutil::{create_dir, ensure_empty_dir, f32_from_le, f32_le_bytes, read, read_json, write, write_json};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];
pub const NORMALIZATION: &str = "minmax-per-slice";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub height: usize,
    pub width: usize,
    #[serde(rename = "K")]
    pub classes: usize,
    pub normalization: String,
}

/// Generation record stored at the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub seed: u64,
    pub counts: [usize; 3],
    pub spec: SceneSpec,
}

/// Seed stream of one split; disjoint across splits.
pub fn split_seed(seed: u64, split: usize, index: usize) -> u64 {
    derive_seed(seed, &[0xda7a, split as u64, index as u64])
}

pub fn sample_id(index: usize) -> String {
    format!("{index:05}")
}

fn paths(dir: &Path, id: &str) -> [PathBuf; 4] {
    ["image.f32", "label.u8", "meta.json", "provenance.json"].map(|ext| dir.join(format!("{id}.{ext}")))
}

pub fn write_sample(dir: &Path, id: &str, sample: &Sample, provenance: Option<&Provenance>) -> AppResult<()> {
    let [img, lab, meta, prov] = paths(dir, id);
    write(&img, f32_le_bytes(sample.image.data().iter().map(|&v| v as f32)))?;
    write(&lab, sample.label.labels())?;
    let m = SampleMeta {
        height: sample.image.height(),
        width: sample.image.width(),
        classes: sample.label.classes(),
        normalization: NORMALIZATION.into(),
    };
    write_json(&meta, &m)?;
    if let Some(p) = provenance {
        write_json(&prov, p)?;
    }
    Ok(())
}

pub fn read_sample(dir: &Path, id: &str) -> AppResult<Sample> {
    let [img, lab, meta, _] = paths(dir, id);
    let m: SampleMeta = read_json(&meta)?;
    let n = m.height * m.width;
    let values = f32_from_le(&img, &read(&img)?)?;
    if values.len() != n {
        return Err(AppError::format(&img, format!("expected {n} values, found {}", values.len())));
    }
    let labels = read(&lab)?;
    if labels.len() != n {
        return Err(AppError::format(&lab, format!("expected {n} labels, found {}", labels.len())));
    }
    let image = ImageSlice::new(m.height, m.width, values.into_iter().map(f64::from).collect())
        .map_err(|e| AppError::format(&img, e))?;
    let label = LabelMap::new(m.height, m.width, m.classes, labels).map_err(|e| AppError::format(&lab, e))?;
    Sample::validate(image, label).map_err(|e| AppError::format(&meta, e))
}

/// Ids present in a split directory, sorted.
pub fn split_ids(dir: &Path) -> AppResult<Vec<String>> {
    let mut ids: Vec<String> = std::fs::read_dir(dir)
        .map_err(AppError::io(dir))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".meta.json")).map(String::from))
        .collect();
    ids.sort();
    Ok(ids)
}

/// Read every sample of one split, validating each.
pub fn read_split(root: &Path, split: &str) -> AppResult<Vec<(String, Sample)>> {
    let dir = root.join(split);
    if !dir.is_dir() {
        return Err(AppError::Missing(dir));
    }
    let ids = split_ids(&dir)?;
    if ids.is_empty() {
        return Err(AppError::Missing(dir));
    }
    let samples = ids.into_iter().map(|id| read_sample(&dir, &id).map(|s| (id, s))).collect::<AppResult<Vec<_>>>()?;
    let (h, w, k) = {
        let s = &samples[0].1;
        (s.label.height(), s.label.width(), s.label.classes())
    };
    if let Some((id, _)) =
        samples.iter().find(|(_, s)| (s.label.height(), s.label.width(), s.label.classes()) != (h, w, k))
    {
        return Err(AppError::format(&dir, format!("sample {id} differs in shape or K from the rest of the split")));
    }
    Ok(samples)
}

/// Generate a synthetic dataset under `root`, which must be absent or empty.
pub fn build_dataset(root: &Path, counts: [usize; 3], spec: &SceneSpec, seed: u64) -> AppResult<()> {
    if let Some(split) = SPLITS.iter().zip(counts).find(|(_, c)| *c == 0) {
        return Err(AppError::Usage(format!("split `{}` needs at least one sample", split.0)));
    }
    spec.validate()?;
    ensure_empty_dir(root)?;
    for (s, (split, count)) in SPLITS.iter().zip(counts).enumerate() {
        let dir = root.join(split);
        create_dir(&dir)?;
        for i in 0..count {
            let (sample, prov) = generate_scene(spec, split_seed(seed, s, i))?;
            write_sample(&dir, &sample_id(i), &sample, Some(&prov))?;
        }
    }
    write_json(&root.join("dataset.json"), &DatasetInfo { seed, counts, spec: spec.clone() })
}

/// Check that all three splits read and agree on shape and K.
pub fn validate_dataset(root: &Path) -> AppResult<[usize; 3]> {
    let mut counts = [0; 3];
    let mut shape = None;
    for (i, split) in SPLITS.iter().enumerate() {
        let samples = read_split(root, split)?;
        let s = &samples[0].1;
        let this = (s.label.height(), s.label.width(), s.label.classes());
        if *shape.get_or_insert(this) != this {
            return Err(AppError::format(root.join(split), "split disagrees with the others on shape or K"));
        }
        counts[i] = samples.len();
    }
    Ok(counts)
}
