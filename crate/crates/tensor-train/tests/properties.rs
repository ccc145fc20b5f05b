mod common;

use common::*;
use proptest::prelude::*;
use tensor_train::cross::{cross, CrossConfig, CrossVariant};
use tensor_train::maxvol::{maxvol_with, DELTA, MAX_ITERS};
use tensor_train::TensorTrain;

fn shapes() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>, u64)> {
    (1usize..=6).prop_flat_map(|order| {
        (
            prop::collection::vec(1usize..=3, order),
            prop::collection::vec(1usize..=4, order - 1),
            prop::collection::vec(1usize..=4, order - 1),
            any::<u64>(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_and_hadamard_ranks_and_entries((dims, ra, rb, seed) in shapes()) {
        let mut rng = rng(seed);
        let a = TensorTrain::random(&dims, &ra, &mut rng).unwrap();
        let b = TensorTrain::random(&dims, &rb, &mut rng).unwrap();
        let (da, db) = (naive_dense(&a), naive_dense(&b));

        let s = a.add(&b).unwrap();
        let h = a.hadamard(&b).unwrap();
        let n = dims.len();
        for i in 1..n {
            prop_assert_eq!(s.ranks()[i], ra[i - 1] + rb[i - 1]);
            prop_assert_eq!(h.ranks()[i], ra[i - 1] * rb[i - 1]);
        }
        let want_s: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x + y).collect();
        let want_h: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x * y).collect();
        assert_close(&naive_dense(&s), &want_s, 1e-10);
        assert_close(&naive_dense(&h), &want_h, 1e-10);
    }

    #[test]
    fn truncation_error_bound((dims, ra, _rb, seed) in shapes(), e in 1i32..=10) {
        let mut rng = rng(seed);
        let a = TensorTrain::random(&dims, &ra, &mut rng).unwrap();
        let tol = 10f64.powi(-e);
        let t = a.truncate(tol, usize::MAX).unwrap();
        let da = naive_dense(&a);
        let diff: Vec<f64> = naive_dense(&t).iter().zip(&da).map(|(x, y)| x - y).collect();
        let n = dims.len().max(2) as f64;
        prop_assert!(frob(&diff) <= (n - 1.0).sqrt() * tol * frob(&da) + 1e-13 * frob(&da));
    }

    #[test]
    fn dense_round_trip_is_lossless((dims, ra, _rb, seed) in shapes()) {
        let mut rng = rng(seed);
        let a = TensorTrain::random(&dims, &ra, &mut rng).unwrap();
        let back = TensorTrain::from_dense(&a.to_dense().unwrap(), 0.0).unwrap();
        assert_close(&naive_dense(&back), &naive_dense(&a), 1e-11);
    }

    #[test]
    fn marginals_sum_to_total((dims, ra, _rb, seed) in shapes()) {
        let mut rng = rng(seed);
        let a = TensorTrain::random(&dims, &ra, &mut rng).unwrap();
        let total: f64 = naive_dense(&a).iter().sum();
        for m in a.marginals() {
            prop_assert!((m.sum() - total).abs() <= 1e-9 * (1.0 + total.abs()));
        }
    }

    #[test]
    fn maxvol_swaps_never_shrink_volume(seed in any::<u64>(), n in 3usize..30, r in 1usize..4) {
        prop_assume!(n >= r);
        let mut rng = rng(seed);
        let m = ndarray::Array2::from_shape_fn((n, r), |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let out = maxvol_with(&m, DELTA, MAX_ITERS).unwrap();
        prop_assert!(out.swap_gains.iter().all(|&g| g > 1.0));
        prop_assert!(out.coefficients.iter().all(|c| c.abs() <= 1.0 + DELTA + 1e-9) || out.swap_gains.len() == MAX_ITERS);
    }

    #[test]
    fn cross_is_seed_deterministic_and_capped(seed in any::<u64>(), max_rank in 1usize..6) {
        let mut rng = rng(seed);
        let a = random_in_range(&[2; 7], &[3; 6], -5.0, 0.0, &mut rng);
        let init = TensorTrain::ones(&a.dims()).unwrap();
        let cfg = CrossConfig { max_rank, rng_seed: seed, ..CrossConfig::default() };
        for variant in [CrossVariant::Sample, CrossVariant::Sweep] {
            let x = cross(f64::exp, &a, &init, &cfg, variant).unwrap();
            let y = cross(f64::exp, &a, &init, &cfg, variant).unwrap();
            prop_assert_eq!(&x.tt, &y.tt);
            prop_assert!(x.tt.max_rank() <= max_rank);
        }
    }
}
