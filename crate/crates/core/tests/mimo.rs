mod common;

use common::*;
use ndarray::Array1;
use num_complex::Complex64;
use proptest::prelude::*;
use tensor_train::cross::CrossVariant;
use ttinfer::mimo::{
    build_log_posterior, complexify_matrix, complexify_vector, lmmse_detect, noise_variance_for_snr, realify,
    realify_matrix, realify_vector, sample_channel, sample_transmission, ttdet, QamConstellation, SnrMode,
};
use ttinfer::oracle::exact_map_oracle;

#[test]
fn qam_energies() {
    for m in [4, 16, 64] {
        let q = QamConstellation::new(m).unwrap();
        let comp: f64 = q.alphabet.iter().map(|a| a * a).sum::<f64>() / q.l() as f64;
        assert!((q.component_energy() - comp).abs() < 1e-12);
        assert!((q.mean_energy() - 2.0 * comp).abs() < 1e-12);
    }
    assert!(QamConstellation::new(8).is_err());
}

#[test]
fn realified_product_matches_complex_product() {
    let mut rng = rng(1);
    let h = sample_channel(3, 4, &mut rng);
    let x = Array1::from_iter((0..3).map(|i| Complex64::new(i as f64 - 1.0, 0.5 * i as f64)));
    let y = h.dot(&x);
    let n = Array1::zeros(4);
    let model = realify(&h, &x, &y, &n).unwrap();
    let got = model.h.dot(&model.x);
    for (a, b) in got.iter().zip(&model.y) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(realify(&h, &x, &Array1::zeros(3), &n).is_err());
}

#[test]
fn expected_snr_is_met_on_average() {
    let qam = QamConstellation::new(16).unwrap();
    let mut rng = rng(2);
    let (mut signal, mut noise) = (0.0, 0.0);
    for _ in 0..4000 {
        let tx = sample_transmission(4, 4, &qam, 7.0, SnrMode::Expected, &mut rng).unwrap();
        let hx = tx.channel.h.dot(&tx.x);
        let n = &tx.y - &hx;
        signal += hx.dot(&hx);
        noise += n.dot(&n);
    }
    let db = 10.0 * (signal / noise).log10();
    assert!((db - 7.0).abs() < 0.15, "{db}");
}

#[test]
fn realized_snr_is_exact() {
    let qam = QamConstellation::new(4).unwrap();
    let mut rng = rng(3);
    for _ in 0..20 {
        let tx = sample_transmission(3, 3, &qam, -2.0, SnrMode::Realized, &mut rng).unwrap();
        let hx = tx.channel.h.dot(&tx.x);
        let n = &tx.y - &hx;
        let db = 10.0 * (hx.dot(&hx) / n.dot(&n)).log10();
        assert!((db + 2.0).abs() < 1e-9);
        assert!((tx.channel.sigma2 - n.dot(&n) / 6.0).abs() < 1e-9 * tx.channel.sigma2.max(1.0));
    }
}

#[test]
fn noise_variance_formula() {
    let h = ndarray::array![[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]];
    // ‖H‖² = 2, Ē = 2, one receive antenna, 0 dB
    assert!((noise_variance_for_snr(&h, 2.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
    assert!(noise_variance_for_snr(&ndarray::Array2::zeros((1, 1)), 2.0, 0.0).is_err());
}

#[test]
fn log_posterior_is_the_gaussian_exponent() {
    let qam = QamConstellation::new(4).unwrap();
    let mut rng = rng(4);
    let tx = sample_transmission(2, 2, &qam, 3.0, SnrMode::Expected, &mut rng).unwrap();
    let lp = build_log_posterior(&tx.y, &tx.channel, &qam.alphabet, 0.0).unwrap();
    for idx in grid(&[2; 4]) {
        let x = Array1::from_iter(idx.iter().map(|&k| qam.alphabet[k]));
        let r = &tx.y - &tx.channel.h.dot(&x);
        let want = -r.dot(&r) / (2.0 * tx.channel.sigma2);
        let got = lp.tt.eval(&idx).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn detectors_agree_at_high_snr() {
    let qam = QamConstellation::new(16).unwrap();
    let mut rng = rng(5);
    for seed in 0..10 {
        let tx = sample_transmission(3, 3, &qam, 40.0, SnrMode::Expected, &mut rng).unwrap();
        let det = ttdet(&tx.y, &tx.channel, &qam.alphabet, 1e-12, &generous(CrossVariant::Sweep, seed)).unwrap();
        assert_eq!(det.decisions, tx.x_idx);
        assert_eq!(lmmse_detect(&tx.y, &tx.channel, &qam).unwrap(), tx.x_idx);
    }
}

#[test]
fn ttdet_matches_the_oracle_on_three_antennas() {
    let qam = QamConstellation::new(4).unwrap();
    let mut rng = rng(6);
    for seed in 0..10 {
        let tx = sample_transmission(3, 3, &qam, 0.0, SnrMode::Expected, &mut rng).unwrap();
        let lp = build_log_posterior(&tx.y, &tx.channel, &qam.alphabet, 0.0).unwrap();
        let exact = exact_map_oracle(&lp).unwrap();
        let det = ttdet(&tx.y, &tx.channel, &qam.alphabet, 0.0, &generous(CrossVariant::Sample, seed)).unwrap();
        assert!(det.marginals.linf_distance(&exact) < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complexify_inverts_realify(re in prop::collection::vec(-5.0f64..5.0, 6), im in prop::collection::vec(-5.0f64..5.0, 6)) {
        let x = Array1::from_iter(re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)));
        prop_assert_eq!(complexify_vector(&realify_vector(&x)).unwrap(), x.clone());
        let h = x.clone().into_shape_with_order((2, 3)).unwrap();
        prop_assert_eq!(complexify_matrix(&realify_matrix(&h)).unwrap(), h);
    }

    #[test]
    fn nearest_symbol_is_nearest(x in -10.0f64..10.0) {
        let q = QamConstellation::new(16).unwrap();
        let k = q.nearest(x);
        prop_assert!(q.alphabet.iter().all(|a| (a - x).abs() >= (q.alphabet[k] - x).abs() - 1e-12));
    }
}
