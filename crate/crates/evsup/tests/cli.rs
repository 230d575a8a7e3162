use std::path::Path;
use std::process::{Command, Output};

fn evsup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evsup")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_data_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    assert_eq!(code(&evsup(&["generate-data", "--train", "2"])), 2);
    let args = [
        "generate-data",
        "--out",
        p(&out),
        "--train",
        "2",
        "--val",
        "1",
        "--test",
        "1",
        "--size",
        "32",
        "--classes",
        "4",
        "--seed",
        "3",
    ];
    assert_eq!(code(&evsup(&args)), 0);
    assert!(out.join("train/00001.label.u8").is_file());
    let again = evsup(&args);
    assert_eq!(code(&again), 3);
    assert_eq!(String::from_utf8_lossy(&again.stderr).lines().count(), 1);
    let zero = evsup(&["generate-data", "--out", p(&dir.path().join("z")), "--test", "0"]);
    assert_eq!(code(&zero), 2);
}

#[test]
fn missing_artifacts_and_arity() {
    let dir = tempfile::tempdir().unwrap();
    let absent = dir.path().join("absent");
    assert_eq!(code(&evsup(&["evaluate", "--checkpoint", p(&absent), "--data", p(&absent)])), 4);
    assert_eq!(code(&evsup(&["train", "--data", p(&absent), "--out", p(&dir.path().join("r"))])), 4);
    assert_eq!(code(&evsup(&["compare", p(&absent), "--out", p(&dir.path().join("c"))])), 2);
    assert_eq!(code(&evsup(&["compare", p(&absent), p(&absent), "--out", p(&dir.path().join("c"))])), 4);
    assert_eq!(code(&evsup(&["train", "--data", "x", "--out", "y", "--profile", "nope"])), 2);
}

#[test]
fn train_evaluate_compare_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    let gen = [
        "generate-data",
        "--out",
        p(&data),
        "--train",
        "4",
        "--val",
        "2",
        "--test",
        "2",
        "--size",
        "32",
        "--seed",
        "1",
    ];
    assert_eq!(code(&evsup(&gen)), 0);
    let cfg = d.join("cfg.toml");
    std::fs::write(&cfg, "K = 3\nT = 2\nbatch_size = 2\nbase_channels = 4\nsamples_per_class = 8\nseed = 5\n").unwrap();

    let full = d.join("full");
    let o = evsup(&["train", "--data", p(&data), "--out", p(&full), "--config", p(&cfg), "--profile", "refuge"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(full.join("epoch_log.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "epoch,L_CE,L_Dice,L_KL,L_gu,L_nu,L_total,val_DSC");
    assert_eq!(log.lines().count(), 3);
    assert!(full.join("checkpoint/manifest.json").is_file() && full.join("config.toml").is_file());
    let o = evsup(&["train", "--data", p(&data), "--out", p(&full), "--config", p(&cfg)]);
    assert_eq!(code(&o), 3);

    let base = d.join("base");
    let o = evsup(&[
        "train",
        "--data",
        p(&data),
        "--out",
        p(&base),
        "--config",
        p(&cfg),
        "--no-gu",
        "--no-nu",
        "--no-hsd",
        "--gamma0",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: noise supervision disabled; gamma forced to 0"));
    let blog = std::fs::read_to_string(base.join("epoch_log.csv")).unwrap();
    // pure EDL baseline logs no supervision losses
    assert!(blog.lines().nth(1).unwrap().split(',').nth(4).unwrap().is_empty());

    for run in [&full, &base] {
        let o = evsup(&[
            "evaluate",
            "--checkpoint",
            p(run),
            "--data",
            p(&data),
            "--sweep",
            "0.0,0.1,0.3,0.5,0.7,0.9",
            "--dump-maps",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let metrics = std::fs::read_to_string(full.join("eval/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);
    assert!(metrics.lines().last().unwrap().starts_with("mean,"));
    assert_eq!(std::fs::read_to_string(full.join("eval/levels.csv")).unwrap().lines().count(), 7);
    assert_eq!(std::fs::read_to_string(full.join("eval/deltas.csv")).unwrap().lines().count(), 16);
    let pgm = std::fs::read(full.join("eval/maps/00000_uncertainty.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
    assert_eq!(pgm.len(), 13 + 32 * 32);
    for name in ["gradient_overlay", "noise_patch_diff", "noise_global_diff"] {
        assert!(full.join(format!("eval/maps/00001_{name}.pgm")).is_file());
    }

    let cmp = d.join("cmp");
    let o = evsup(&["compare", p(&full), p(&base), "--out", p(&cmp)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(cmp.join("comparison.md")).unwrap();
    assert!(md.contains("| full |") && md.contains("| base |"));
    assert_eq!(std::fs::read_to_string(cmp.join("comparison.csv")).unwrap().lines().count(), 3);
}
