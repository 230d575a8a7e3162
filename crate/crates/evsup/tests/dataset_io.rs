use evsup::checkpoint;
use evsup::dataset::{build_dataset, read_split, validate_dataset, SPLITS};
use evsup::AppError;
use evsup_core::nn::{EvidenceModel, UNet, UNetArch};
use evsup_core::synth::SceneSpec;
use evsup_core::{ImageSlice, TrainConfig};
use std::collections::BTreeMap;
use std::path::Path;

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_sized_dataset_builds_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    build_dataset(&root, [200, 20, 50], &SceneSpec::default(), 7).unwrap();
    assert_eq!(validate_dataset(&root).unwrap(), [200, 20, 50]);
    let files = tree(&root);
    // 4 files per sample plus dataset.json
    assert_eq!(files.len(), 270 * 4 + 1);
    let test = read_split(&root, "test").unwrap();
    assert_eq!(test[0].0, "00000");
    assert_eq!(test[0].1.image.len(), 64 * 64);
}

#[test]
fn rebuild_is_byte_identical_and_splits_differ() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    build_dataset(&a, [3, 3, 3], &SceneSpec::default(), 11).unwrap();
    build_dataset(&b, [3, 3, 3], &SceneSpec::default(), 11).unwrap();
    assert_eq!(tree(&a), tree(&b));
    let ta = tree(&a);
    for (s, t) in [("train", "val"), ("train", "test"), ("val", "test")] {
        assert_ne!(ta[&format!("{s}/00000.image.f32")], ta[&format!("{t}/00000.image.f32")]);
    }
}

#[test]
fn counts_and_overwrite_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("d");
    let err = build_dataset(&root, [2, 1, 0], &SceneSpec::default(), 1).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    build_dataset(&root, [1, 1, 1], &SceneSpec::default(), 1).unwrap();
    let err = build_dataset(&root, [1, 1, 1], &SceneSpec::default(), 1).unwrap_err();
    assert!(matches!(err, AppError::Overwrite(_)));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn corrupt_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("d");
    build_dataset(&root, [1, 1, 1], &SceneSpec::default(), 1).unwrap();
    let lab = root.join("val/00000.label.u8");
    let mut bytes = std::fs::read(&lab).unwrap();
    bytes[0] = 3;
    std::fs::write(&lab, &bytes).unwrap();
    assert!(read_split(&root, "val").is_err());
    let img = root.join("test/00000.image.f32");
    let bytes = std::fs::read(&img).unwrap();
    std::fs::write(&img, &bytes[..bytes.len() - 4]).unwrap();
    assert!(read_split(&root, "test").is_err());
    assert!(matches!(read_split(&root, "nope").unwrap_err(), AppError::Missing(_)));
    for s in SPLITS {
        assert!(root.join(s).is_dir());
    }
}

#[test]
fn image_bytes_are_little_endian_f32() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("d");
    build_dataset(&root, [1, 1, 1], &SceneSpec::default(), 5).unwrap();
    let bytes = std::fs::read(root.join("train/00000.image.f32")).unwrap();
    let s = &read_split(&root, "train").unwrap()[0].1;
    for (i, c) in bytes.chunks_exact(4).enumerate() {
        assert_eq!(f32::from_le_bytes(c.try_into().unwrap()) as f64, s.image.data()[i]);
    }
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("train/00000.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["K"], 3);
    assert_eq!(meta["height"], 64);
    let prov: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("train/00000.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["boundaries"].as_array().unwrap().len(), 2);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let net = UNet::new(UNetArch::new(4, 3, 3), 99);
    let cfg = TrainConfig { base_channels: 4, ..Default::default() };
    checkpoint::save(dir.path(), &net, 3, &cfg).unwrap();
    let (back, manifest) = checkpoint::load(dir.path()).unwrap();
    assert_eq!(manifest.epoch, 3);
    assert_eq!(manifest.config, cfg);
    assert_eq!(back.params(), net.params());
    let img = ImageSlice::new(16, 16, (0..256).map(|i| (i % 17) as f64 / 16.0).collect()).unwrap();
    let (a, b) = (net.evidence(&img).unwrap(), back.evidence(&img).unwrap());
    assert!(a.evidence().iter().zip(b.evidence()).all(|(x, y)| x.to_bits() == y.to_bits()));

    let blob = dir.path().join(checkpoint::PARAMS);
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes[5] ^= 1;
    std::fs::write(&blob, bytes).unwrap();
    assert!(checkpoint::load(dir.path()).is_err());
    assert!(matches!(checkpoint::load(&dir.path().join("absent")).unwrap_err(), AppError::Missing(_)));
}
