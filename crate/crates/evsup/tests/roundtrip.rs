use evsup::fsutil::{f32_from_le, f32_le_bytes};
use evsup::reports::{read_aggregate, write_metrics};
use evsup::run::{config_from_toml, config_to_toml};
use evsup_core::{MetricsReport, TrainConfig};
use proptest::prelude::*;
use std::path::Path;

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

fn report() -> impl Strategy<Value = MetricsReport> {
    (
        (finite(), prop::option::of(finite()), finite(), finite()),
        (prop::option::of(finite()), prop::option::of(finite()), prop::option::of(finite())),
        (prop::option::of(finite()), prop::option::of(finite())),
        prop::collection::vec(finite(), 0..4),
        prop::collection::vec("[a-z][a-z _]{0,12}[a-z]", 0..3),
    )
        .prop_map(|((dsc, hd95, ece, ueo), (ucc_g, ucc_mu, ur_g), (ur_mu, ur_g_ties), dsc_per_class, flags)| {
            MetricsReport { dsc, dsc_per_class, hd95, ece, ueo, ucc_g, ucc_mu, ur_g, ur_mu, ur_g_ties, flags }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_csv_round_trips(r in report()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics(&path, &[("00000".into(), r.clone())], &r).unwrap();
        prop_assert_eq!(read_aggregate(&path).unwrap(), r);
    }

    #[test]
    fn f32_bytes_round_trip(v in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 0..64)) {
        let bytes = f32_le_bytes(v.iter().copied());
        prop_assert_eq!(bytes.len(), 4 * v.len());
        prop_assert_eq!(f32_from_le(Path::new("x"), &bytes).unwrap(), v);
    }

    #[test]
    fn config_toml_round_trips(lr in 1e-5f64..1.0, epochs in 1usize..200, seed in 0..=i64::MAX as u64, beta in prop::option::of(0.0f64..10.0), use_nu in any::<bool>()) {
        let mut cfg = TrainConfig { lr, epochs, seed, use_nu, ..Default::default() };
        cfg.supervision.beta0 = beta;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, config_to_toml(&cfg).unwrap()).unwrap();
        prop_assert_eq!(config_from_toml(&path).unwrap(), cfg);
    }
}

#[test]
fn seeds_beyond_toml_range_are_rejected_up_front() {
    let cfg = TrainConfig { seed: u64::MAX, ..Default::default() };
    assert!(cfg.validate().is_err());
}
