use gbcal_core::numerics::{mean, variance};
use gbcal_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 0usize..300, k in 0.05f64..0.95, t in 0.0f64..0.5, seed in any::<u64>()) {
        let test = t * (1.0 - k);
        let spec = SplitSpec::new(k, 1.0 - k - test, test, seed).unwrap();
        let idx = split_indices(n, &spec).unwrap();
        let mut all: Vec<usize> = idx.train.iter().chain(&idx.calib).chain(&idx.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(&idx, &split_indices(n, &spec).unwrap());
    }

    #[test]
    fn split_dataset_multiset_union(vals in prop::collection::vec(-5.0f64..5.0, 0..50), seed in any::<u64>()) {
        let d = SimpleDataset::scalar(vals.clone());
        let spec = SplitSpec::new(0.5, 0.3, 0.2, seed).unwrap();
        let (a, b, c) = split_dataset(&d, &spec).unwrap();
        let mut got: Vec<f64> = a.values().iter().chain(b.values()).chain(c.values()).copied().collect();
        let mut want = vals;
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn simulators_are_bit_reproducible(seed in any::<u64>(), n in 1usize..40) {
        let t = MixtureTruth::default();
        prop_assert_eq!(simulate_mixture::<f64>(&t, n, n, seed).unwrap(), simulate_mixture::<f64>(&t, n, n, seed).unwrap());
        let s = SsmTruth::default();
        prop_assert_eq!(simulate_ssm::<f64>(&s, n, 6, seed).unwrap(), simulate_ssm::<f64>(&s, n, 6, seed).unwrap());
        prop_assert_eq!(simulate_conjugate_normal::<f64>(0.0, n, seed), simulate_conjugate_normal::<f64>(0.0, n, seed));
    }

    #[test]
    fn anchors_sit_at_block_ends(n in 1usize..20, d in 2usize..9, seed in any::<u64>()) {
        let ds = simulate_ssm::<f64>(&SsmTruth::default(), n, d, seed).unwrap();
        let a = ds.anchor_index();
        prop_assert_eq!(a.len(), 2 * n);
        prop_assert!(a.iter().all(|&(_, j)| j == 0 || j == d - 1));
        prop_assert_eq!(a.len() + ds.missing_index().len(), n * d);
    }
}

#[test]
fn mixture_outlier_fraction_and_mean() {
    let t = MixtureTruth::default();
    let d = simulate_mixture::<f64>(&t, 0, 100_000, 2024).unwrap();
    let x2 = d.x2.values();
    let near_outlier =
        x2.iter().filter(|v| (*v - 6.0).abs() < 3.0).count() as f64 / x2.len() as f64;
    assert!(
        (near_outlier - 0.10).abs() < 0.01,
        "fraction {near_outlier}"
    );
    // Mean 0.6; sd of one draw is sqrt(1 + 0.9*0.1*36).
    let se = (1.0f64 + 0.09 * 36.0).sqrt() / (x2.len() as f64).sqrt();
    assert!((mean(x2) - 0.6).abs() < 5.0 * se);
}

#[test]
fn ar1_stationary_variance() {
    let d = simulate_ssm::<f64>(&SsmTruth::default(), 100_000, 10, 77).unwrap();
    let v = variance(d.theta_all().unwrap());
    assert!((v / (0.49 / 0.75) - 1.0).abs() < 0.01, "variance {v}");
}

#[test]
fn conjugate_sample_mean_clt_bound() {
    let d = simulate_conjugate_normal::<f64>(0.0, 1_000_000, 5);
    assert!(d.mean().abs() < 0.004);
    assert_eq!(simulate_conjugate_normal::<f64>(0.0, 0, 5).n(), 0);
}

#[test]
fn documented_mixture_sizes() {
    let d = simulate_mixture::<f64>(&MixtureTruth::default(), 30, 60, 1).unwrap();
    assert_eq!((d.x1.n(), d.x2.n()), (30, 60));
    assert!((d.ratio_alpha().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn ssm_split_ten_fifty() {
    let d = simulate_ssm::<f64>(&SsmTruth::default(), 60, 6, 1).unwrap();
    let spec = SplitSpec::train_calib(1.0 / 6.0, 3).unwrap();
    let (tr, ca, te) = split_ssm_blocks(&d, &spec).unwrap();
    assert_eq!(tr.unwrap().n_blocks(), 10);
    assert_eq!(ca.unwrap().n_blocks(), 50);
    assert!(te.is_none());
}
