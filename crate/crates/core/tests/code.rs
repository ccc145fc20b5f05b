mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use tensor_train::cross::{CrossConfig, CrossVariant};
use ttinfer::code::{
    bitwise_map_oracle, bpsk, build_code_logapp_tt, euclidean_distance, load_code, logapp_direct, CodeLogApp,
    LinearCode,
};
use ttinfer::decode::{default_schedule, ttdec, DecodeSettings, StoppingRule, DEFAULT_SAFETY};
use ttinfer::stats::n0_from_ebn0;
use ttinfer::InferError;

fn noisy(code: &LinearCode, u: &[u8], n0: f64, rng: &mut impl Rng) -> Vec<f64> {
    let sigma = (n0 / 2.0).sqrt();
    bpsk(&code.encode(u))
        .iter()
        .map(|&x| x + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn settings(schedule: Vec<usize>, variant: CrossVariant) -> DecodeSettings {
    DecodeSettings {
        schedule,
        cross: CrossConfig::default(),
        taylor_p: 10,
        variant,
        tol: 1e-12,
    }
}

#[test]
fn shipped_codes_load() {
    for (file, n, k, d, verified) in [
        ("repetition_3_1.txt", 3, 1, 3, true),
        ("hamming_7_4.txt", 7, 4, 3, true),
        ("bch_15_7.txt", 15, 7, 5, true),
        ("bch_31_16.txt", 31, 16, 7, true),
        ("bch_63_30.txt", 63, 30, 13, false),
    ] {
        let code = load_code(data(file)).unwrap();
        assert_eq!((code.n(), code.k(), code.d_min(), code.d_min_verified()), (n, k, d, verified), "{file}");
    }
}

#[test]
fn wrong_minimum_distance_is_rejected() {
    let text = "3 1 2\n1\n1\n1\n";
    assert!(matches!(LinearCode::parse(text), Err(InferError::Code(_))));
}

#[test]
fn logapp_train_matches_direct_evaluation() {
    let code = load_code(data("bch_15_7.txt")).unwrap();
    let mut rng = rng(1);
    let y = noisy(&code, &[1, 0, 1, 1, 0, 0, 1], 0.8, &mut rng);
    let tt = build_code_logapp_tt(&code, &y, 0.8, 0.0).unwrap();
    for idx in grid(&[2; 7]) {
        let u: Vec<u8> = idx.iter().map(|&b| b as u8).collect();
        let want = logapp_direct(&code, &y, 0.8, &u);
        assert!((tt.eval(&idx).unwrap() - want).abs() < 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn cached_cores_serve_every_observation() {
    let code = load_code(data("hamming_7_4.txt")).unwrap();
    let app = CodeLogApp::new(code.clone()).unwrap();
    let mut rng = rng(2);
    for _ in 0..5 {
        let y = noisy(&code, &[0, 1, 1, 0], 1.0, &mut rng);
        let a = app.build_exact(&y, 1.0).unwrap();
        let b = CodeLogApp::new(code.clone()).unwrap().build_exact(&y, 1.0).unwrap();
        assert_eq!(a.cores(), b.cores());
        assert!(a.max_rank() <= code.n());
    }
    assert!(matches!(app.build_exact(&[0.0; 6], 1.0), Err(InferError::Shape(_))));
}

#[test]
fn oracle_marginals_by_enumeration() {
    let code = load_code(data("hamming_7_4.txt")).unwrap();
    let mut rng = rng(3);
    let y = noisy(&code, &[1, 1, 0, 1], 1.5, &mut rng);
    let values: Vec<f64> = grid(&[2; 4])
        .iter()
        .map(|idx| {
            let u: Vec<u8> = idx.iter().map(|&b| b as u8).collect();
            logapp_direct(&code, &y, 1.5, &u)
        })
        .collect();
    let brute = brute_marginals(&values, &[2; 4]);
    let m = bitwise_map_oracle(&code, &y, 1.5).unwrap();
    for (row, want) in m.rows().iter().zip(&brute) {
        assert!((row[0] - want[0]).abs() < 1e-12);
    }
}

#[test]
fn hamming_decodes_single_errors() {
    // a single flipped bit sent with a strong margin is corrected by MAP
    let code = load_code(data("hamming_7_4.txt")).unwrap();
    let app = CodeLogApp::new(code.clone()).unwrap();
    let u = [1, 0, 1, 1];
    let c = code.encode(&u);
    for flip in 0..7 {
        let mut y: Vec<f64> = bpsk(&c).to_vec();
        y[flip] = -0.9 * y[flip];
        let n0 = 0.5;
        let oracle: Vec<u8> = bitwise_map_oracle(&code, &y, n0).unwrap().argmax().iter().map(|&b| b as u8).collect();
        assert_eq!(oracle, u);
        let rule = StoppingRule::new(&code, n0, DEFAULT_SAFETY);
        let out = ttdec(&y, &app, n0, &rule, &settings(vec![4], CrossVariant::Sweep)).unwrap();
        assert_eq!(out.u, u, "flip {flip}");
    }
}

#[test]
fn clean_observation_stops_early() {
    let code = load_code(data("bch_31_16.txt")).unwrap();
    let app = CodeLogApp::new(code.clone()).unwrap();
    let n0 = n0_from_ebn0(5.0, code.rate());
    let mut rng = rng(4);
    let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let y = bpsk(&code.encode(&u)).to_vec();
    let rule = StoppingRule::new(&code, n0, DEFAULT_SAFETY);
    let out = ttdec(&y, &app, n0, &rule, &settings(vec![5, 10, 20], CrossVariant::Sample)).unwrap();
    assert_eq!(out.u, u);
    assert!(out.early_stop);
    assert_eq!(out.steps, 1);
    assert_eq!(out.nu, 0.0);
}

#[test]
fn distance_trace_never_increases() {
    let code = load_code(data("bch_63_30.txt")).unwrap();
    let app = CodeLogApp::new(code.clone()).unwrap();
    let n0 = n0_from_ebn0(2.0, code.rate());
    let rule = StoppingRule::new(&code, n0, DEFAULT_SAFETY);
    let mut rng = rng(5);
    let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let y = noisy(&code, &u, n0, &mut rng);
    let mut s = settings(default_schedule(&code), CrossVariant::Sweep);
    s.cross.sample_oversample = ttinfer::decode::DECODE_OVERSAMPLE;
    let out = ttdec(&y, &app, n0, &rule, &s).unwrap();
    assert!(out.nu_trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(out.nu_trace.len(), out.steps);
    assert_eq!(out.nu, euclidean_distance(&code.encode(&out.u), &y));
    assert_eq!(out.early_stop, out.nu < rule.eta);
}

#[test]
fn schedule_must_increase() {
    let s = settings(vec![10, 10], CrossVariant::Sample);
    assert!(matches!(s.validate(), Err(InferError::Config(_))));
    assert!(settings(vec![], CrossVariant::Sample).validate().is_err());
    assert!(settings(vec![0, 1], CrossVariant::Sample).validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_is_linear(a in 0u64..128, b in 0u64..128) {
        let code = load_code(data("bch_15_7.txt")).unwrap();
        let sum: Vec<u8> = code.encode_mask(a).iter().zip(code.encode_mask(b)).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(code.encode_mask(a ^ b), sum);
    }

    #[test]
    fn nonzero_codewords_respect_dmin(u in 1u64..128) {
        let code = load_code(data("bch_15_7.txt")).unwrap();
        let w = code.encode_mask(u).iter().filter(|&&b| b == 1).count();
        prop_assert!(w >= code.d_min());
    }

    #[test]
    fn logapp_tracks_distance(u in 0u64..16, noise in prop::collection::vec(-1.0f64..1.0, 7)) {
        // Λ(u) = (‖y‖² + n - d(c(u), y)) / N0
        let code = load_code(data("hamming_7_4.txt")).unwrap();
        let c = code.encode_mask(u);
        let y: Vec<f64> = bpsk(&c).iter().zip(&noise).map(|(x, z)| x + z).collect();
        let bits: Vec<u8> = (0..4).map(|i| (u >> i & 1) as u8).collect();
        let lam = logapp_direct(&code, &y, 1.0, &bits);
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let want = yy + 7.0 - euclidean_distance(&c, &y);
        prop_assert!((lam - want).abs() < 1e-10);
    }
}
