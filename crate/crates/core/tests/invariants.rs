use evsup_core::edl::{loss_ce, loss_dice, loss_kl, uncertainty};
use evsup_core::imageops::{apply_noise, extract_boundary_geometry, gaussian_smooth};
use evsup_core::metrics::{dsc, spearman};
use evsup_core::supervision::gradient_supervision_loss;
use evsup_core::{rng_from_seed, BoundaryGeometry, EvidenceMap, ImageSlice, LabelMap, NoiseSpec};
use proptest::prelude::*;

fn evidence(max_pixels: usize) -> impl Strategy<Value = EvidenceMap> {
    (1..=max_pixels, 2usize..=4).prop_flat_map(|(v, k)| {
        prop::collection::vec(0.0f64..50.0, v * k).prop_map(move |e| EvidenceMap::new(v, k, e).unwrap())
    })
}

fn labels(side: usize) -> impl Strategy<Value = LabelMap> {
    (2usize..=4).prop_flat_map(move |k| {
        prop::collection::vec(0..k as u8, side * side).prop_map(move |l| LabelMap::new(side, side, k, l).unwrap())
    })
}

proptest! {
    #[test]
    fn probabilities_sum_to_one_and_u_times_s_is_k(e in evidence(32)) {
        let p = e.expected_probs();
        let u = uncertainty(&e);
        let k = e.classes();
        for i in 0..e.pixels() {
            let s: f64 = p[i * k..(i + 1) * k].iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!((u[i] * e.strength(i) - k as f64).abs() < 1e-12);
            prop_assert!(u[i] > 0.0 && u[i] <= 1.0);
        }
    }

    #[test]
    fn more_evidence_means_less_uncertainty(e in evidence(16), class in 0usize..4, extra in 1e-3f64..10.0) {
        let k = e.classes();
        let c = class % k;
        let mut raw = e.evidence().to_vec();
        for i in 0..e.pixels() {
            raw[i * k + c] += extra;
        }
        let more = EvidenceMap::new(e.pixels(), k, raw).unwrap();
        for (a, b) in uncertainty(&e).iter().zip(uncertainty(&more)) {
            prop_assert!(b < *a);
        }
    }

    #[test]
    fn segmentation_losses_are_finite_and_bounded(y in labels(8), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        let k = y.classes();
        let e = EvidenceMap::new(64, k, (0..64 * k).map(|_| rng.random_range(0.0..20.0)).collect()).unwrap();
        let ce = loss_ce(&e, &y).value;
        let dice = loss_dice(&e, &y, false).value;
        let kl = loss_kl(&e, &y).value;
        prop_assert!(ce.is_finite() && ce >= 0.0);
        prop_assert!((0.0..=1.0).contains(&dice));
        prop_assert!(kl.is_finite() && kl >= -1e-12);
    }

    #[test]
    fn spearman_is_symmetric_and_rank_invariant(xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&y, &x)) {
            prop_assert!((a - b).abs() < 1e-12);
            let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            prop_assert!((spearman(&tx, &y).unwrap() - a).abs() < 1e-12);
            let flipped: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((spearman(&flipped, &y).unwrap() + a).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
        }
    }

    #[test]
    fn boundary_distance_is_one_lipschitz(y in labels(12)) {
        let g = extract_boundary_geometry(&y, 1.0);
        if g.has_boundary() {
            let w = 12;
            for i in 0..g.distance.len() {
                let (r, c) = (i / w, i % w);
                if c + 1 < w {
                    prop_assert!((g.distance[i] - g.distance[i + 1]).abs() <= 1.0 + 1e-12);
                }
                if r + 1 < 12 {
                    prop_assert!((g.distance[i] - g.distance[i + w]).abs() <= 1.0 + 1e-12);
                }
            }
            for &b in &g.boundary {
                prop_assert!(g.distance[b] <= 1.0);
            }
        } else {
            prop_assert!(g.distance.iter().all(|d| d.is_infinite()));
        }
    }

    #[test]
    fn gradient_supervision_is_order_symmetric(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20)) {
        let n = pairs.len();
        let (g, u): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let geom = |g: Vec<f64>| BoundaryGeometry { height: 1, width: n, radius: 1.0, boundary: (0..n).collect(), distance: vec![0.0; n], gradient: g };
        let a = gradient_supervision_loss(&u, &geom(g.clone()), usize::MAX, &mut rng_from_seed(0)).value;
        let (gr, ur): (Vec<f64>, Vec<f64>) = (g.iter().rev().copied().collect(), u.iter().rev().copied().collect());
        let b = gradient_supervision_loss(&ur, &geom(gr), usize::MAX, &mut rng_from_seed(0)).value;
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn noise_stays_in_range(data in prop::collection::vec(0.0f64..=1.0, 64), mean in 0.0f64..1.0, seed in any::<u64>()) {
        let img = ImageSlice::new(8, 8, data).unwrap();
        let spec = NoiseSpec::global(mean, 0.05, seed);
        let out = apply_noise(&img, &spec).unwrap();
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(apply_noise(&img, &spec).unwrap(), out);
    }
}

#[test]
fn smoothing_preserves_constants() {
    let img = ImageSlice::filled(9, 11, 0.4).unwrap();
    for sigma in [0.0, 0.5, 2.0] {
        assert!(gaussian_smooth(&img, sigma).data().iter().all(|v| (v - 0.4).abs() < 1e-12));
    }
}

#[test]
fn perfect_prediction_scores_one() {
    let y = LabelMap::new(8, 8, 3, (0..64).map(|i| (i / 22) as u8).collect()).unwrap();
    let r = dsc(&y, &y);
    assert_eq!(r.mean, 1.0);
}
