mod common;

use common::*;
use ndarray::{array, Array2, Array3};
use rand::Rng;
use tensor_train::{Core, DenseTensor, TensorTrain, TtError};

/// The 2x2x2 tensor with slices [[1,2],[2,4]] and [[2,4],[4,8]], i.e.
/// entries 2^(k1 + k2 + k3 - 3) in 1-based indexing.
fn small_example_dense() -> DenseTensor {
    DenseTensor::from_fn(&[2, 2, 2], |idx| 2f64.powi(idx.iter().sum::<usize>() as i32)).unwrap()
}

/// Trivial TT of the small example: identity stack, the two matrix slices,
/// identity stack (ranks 2).
fn small_example_trivial() -> TensorTrain {
    let e0 = array![[1.0, 0.0]];
    let e1 = array![[0.0, 1.0]];
    let g1 = Core::from_slices(&[e0, e1]).unwrap();
    let mut g2 = Array3::zeros((2, 2, 2));
    // G2(k2)[k1, k3] = A(k1, k2, k3)
    for k1 in 0..2 {
        for k2 in 0..2 {
            for k3 in 0..2 {
                g2[[k1, k2, k3]] = 2f64.powi((k1 + k2 + k3) as i32);
            }
        }
    }
    let g3 = Core::from_slices(&[array![[1.0], [0.0]], array![[0.0], [1.0]]]).unwrap();
    TensorTrain::new(vec![g1, Core::new(g2).unwrap(), g3]).unwrap()
}

#[test]
fn eval_small_example_trivial_form() {
    let tt = small_example_trivial();
    assert_eq!(tt.ranks(), vec![1, 2, 2, 1]);
    assert_eq!(tt.eval(&one_based(&[1, 2, 2])).unwrap(), 4.0);
    assert_eq!(tt.to_dense().unwrap(), small_example_dense());
}

#[test]
fn eval_ones_and_random() {
    let ones = TensorTrain::ones(&[3, 2, 4]).unwrap();
    for idx in grid(&[3, 2, 4]) {
        assert_eq!(ones.eval(&idx).unwrap(), 1.0);
    }
    let mut rng = rng(1);
    let tt = TensorTrain::random(&[3, 3, 3, 3], &[2, 2, 2], &mut rng).unwrap();
    let dense = tt.to_dense().unwrap();
    for idx in grid(&tt.dims()) {
        let want = naive_entry(&tt, &idx);
        assert!((dense.get(&idx).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
        assert!((tt.eval(&idx).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn eval_out_of_range() {
    let tt = TensorTrain::ones(&[2, 2]).unwrap();
    assert!(matches!(
        tt.eval(&[0, 2]),
        Err(TtError::IndexOutOfRange { .. })
    ));
}

#[test]
fn rank_one_small_example_to_dense() {
    let tt = TensorTrain::rank_one(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
    let dense = tt.to_dense().unwrap();
    // slice k3 = 1: [[1,2],[2,4]], slice k3 = 2: [[2,4],[4,8]]
    let slice = |k3: usize| {
        Array2::from_shape_fn((2, 2), |(i, j)| dense.get(&[i, j, k3 - 1]).unwrap())
    };
    assert_eq!(slice(1), array![[1.0, 2.0], [2.0, 4.0]]);
    assert_eq!(slice(2), array![[2.0, 4.0], [4.0, 8.0]]);
}

#[test]
fn zero_core_gives_zero_dense() {
    let mut rng = rng(2);
    let tt = TensorTrain::random(&[2, 3, 2], &[2, 2], &mut rng).unwrap();
    let mut cores = tt.into_cores();
    cores[1] = Core::new(Array3::zeros((2, 3, 2))).unwrap();
    let z = TensorTrain::new(cores).unwrap();
    assert!(z.to_dense().unwrap().data().iter().all(|&x| x == 0.0));
}

#[test]
fn dense_budget() {
    let tt = TensorTrain::ones(&[4; 13]).unwrap();
    assert!(matches!(tt.to_dense(), Err(TtError::Capacity { .. })));
    assert!(tt.to_dense_with_budget(1 << 26).is_ok());
}

#[test]
fn from_dense_small_example_is_rank_one() {
    let tt = TensorTrain::from_dense(&small_example_dense(), 1e-12).unwrap();
    assert_eq!(tt.ranks(), vec![1, 1, 1, 1]);
    assert!((tt.eval(&one_based(&[1, 2, 2])).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn from_dense_outer_product_is_rank_one() {
    let v = [vec![1.0, -2.0, 0.5], vec![3.0, 1.0], vec![0.25, 4.0, -1.0, 2.0]];
    let dense = DenseTensor::from_fn(&[3, 2, 4], |i| v[0][i[0]] * v[1][i[1]] * v[2][i[2]]).unwrap();
    let tt = TensorTrain::from_dense(&dense, 1e-12).unwrap();
    assert_eq!(tt.ranks(), vec![1, 1, 1, 1]);
}

#[test]
fn from_dense_exact_reconstruction() {
    let mut rng = rng(3);
    let dense = DenseTensor::from_fn(&[3, 3, 3, 3], |_| rng.random_range(-1.0..1.0)).unwrap();
    let tt = TensorTrain::from_dense(&dense, 0.0).unwrap();
    assert_eq!(tt.ranks(), vec![1, 3, 9, 3, 1]);
    assert_close(&naive_dense(&tt), dense.data(), 1e-13);
}

#[test]
fn round_trip_through_dense() {
    let mut rng = rng(4);
    let tt = TensorTrain::random(&[2, 3, 4, 2], &[2, 3, 2], &mut rng).unwrap();
    let back = TensorTrain::from_dense(&tt.to_dense().unwrap(), 0.0).unwrap();
    assert_close(&naive_dense(&back), &naive_dense(&tt), 1e-12);
}

#[test]
fn add_rank_arithmetic() {
    let mut rng = rng(5);
    let a = TensorTrain::random(&[2, 3, 2], &[2, 3], &mut rng).unwrap();
    let b = TensorTrain::random(&[2, 3, 2], &[4, 1], &mut rng).unwrap();
    let c = a.add(&b).unwrap();
    assert_eq!(c.ranks(), vec![1, 6, 4, 1]);
    let want: Vec<f64> = naive_dense(&a).iter().zip(naive_dense(&b)).map(|(x, y)| x + y).collect();
    assert_close(&naive_dense(&c), &want, 1e-12);
    let z = a.add(&TensorTrain::zeros(&[2, 3, 2]).unwrap()).unwrap();
    assert_close(&naive_dense(&z), &naive_dense(&a), 1e-15);
    assert!(matches!(
        a.add(&TensorTrain::ones(&[2, 3, 3]).unwrap()),
        Err(TtError::Shape(_))
    ));
}

#[test]
fn hadamard_rank_arithmetic() {
    let mut rng = rng(6);
    let a = TensorTrain::random(&[2, 3, 2], &[2, 3], &mut rng).unwrap();
    let b = TensorTrain::random(&[2, 3, 2], &[2, 2], &mut rng).unwrap();
    let c = a.hadamard(&b).unwrap();
    assert_eq!(c.ranks(), vec![1, 4, 6, 1]);
    let want: Vec<f64> = naive_dense(&a).iter().zip(naive_dense(&b)).map(|(x, y)| x * y).collect();
    assert_close(&naive_dense(&c), &want, 1e-12);
    let same = a.hadamard(&TensorTrain::ones(&[2, 3, 2]).unwrap()).unwrap();
    assert_close(&naive_dense(&same), &naive_dense(&a), 1e-15);
    assert!(a.hadamard(&TensorTrain::ones(&[2, 3]).unwrap()).is_err());
}

#[test]
fn scale_examples() {
    let mut rng = rng(7);
    let a = TensorTrain::random(&[3, 2, 3], &[2, 2], &mut rng).unwrap();
    assert_eq!(naive_dense(&a.scale(1.0)), naive_dense(&a));
    assert!(naive_dense(&a.scale(0.0)).iter().all(|&x| x == 0.0));
    let sigma2 = 0.37;
    let lambda = -1.0 / (2.0 * sigma2);
    let want: Vec<f64> = naive_dense(&a).iter().map(|x| lambda * x).collect();
    let got = a.scale(lambda);
    assert_eq!(got.ranks(), a.ranks());
    assert_close(&naive_dense(&got), &want, 1e-14);
}

#[test]
fn mode_multiply_examples() {
    let mut rng = rng(8);
    let a = TensorTrain::random(&[3, 4, 2], &[2, 3], &mut rng).unwrap();
    let same = a.mode_multiply(1, &Array2::eye(4)).unwrap();
    assert_close(&naive_dense(&same), &naive_dense(&a), 1e-15);

    let summed = a.mode_multiply(1, &Array2::ones((1, 4))).unwrap();
    assert_eq!(summed.dims(), vec![3, 1, 2]);
    for idx in grid(&[3, 1, 2]) {
        let want: f64 = (0..4).map(|k| naive_entry(&a, &[idx[0], k, idx[2]])).sum();
        assert!((summed.eval(&idx).unwrap() - want).abs() < 1e-12);
    }

    let u = Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0));
    let b = a.mode_multiply(1, &u).unwrap();
    assert_eq!(b.dims(), vec![3, 5, 2]);
    for idx in grid(&[3, 5, 2]) {
        let want: f64 = (0..4)
            .map(|j| u[[idx[1], j]] * naive_entry(&a, &[idx[0], j, idx[2]]))
            .sum();
        assert!((b.eval(&idx).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn marginal_examples() {
    let ones = TensorTrain::ones(&[3, 3, 3, 3]).unwrap();
    for i in 0..4 {
        assert_eq!(ones.marginal(i).unwrap().to_vec(), vec![27.0; 3]);
    }
    let v = [vec![1.0, 2.0], vec![0.5, -1.0, 3.0], vec![2.0, 2.0]];
    let tt = TensorTrain::rank_one(&v).unwrap();
    let m = tt.marginal(1).unwrap();
    for k in 0..3 {
        assert!((m[k] - v[1][k] * 3.0 * 4.0).abs() < 1e-14);
    }

    let mut rng = rng(9);
    let a = TensorTrain::random(&[2, 3, 4, 2], &[3, 2, 2], &mut rng).unwrap();
    let all = grid(&a.dims());
    for i in 0..4 {
        let got = a.marginal(i).unwrap();
        for k in 0..a.dims()[i] {
            let want: f64 = all.iter().filter(|idx| idx[i] == k).map(|idx| naive_entry(&a, idx)).sum();
            assert!((got[k] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }
    assert_eq!(a.marginals().len(), 4);
}

#[test]
fn norm_examples() {
    assert_eq!(TensorTrain::zeros(&[2, 2, 2]).unwrap().norm().unwrap(), 0.0);
    let ones = TensorTrain::ones(&[2, 2, 2]).unwrap();
    assert!((ones.norm().unwrap() - 8f64.sqrt()).abs() < 1e-14);
    let mut rng = rng(10);
    let a = TensorTrain::random(&[3, 2, 4, 3], &[3, 4, 2], &mut rng).unwrap();
    let want = frob(&naive_dense(&a));
    assert!((a.norm().unwrap() - want).abs() < 1e-12 * want);
}

#[test]
fn truncate_small_example_to_rank_one() {
    let t = small_example_trivial().truncate(1e-12, usize::MAX).unwrap();
    assert_eq!(t.ranks(), vec![1, 1, 1, 1]);
    assert_close(&naive_dense(&t), small_example_dense().data(), 1e-14);
    assert!((t.eval(&one_based(&[1, 2, 2])).unwrap() - 4.0).abs() < 1e-13);
}

#[test]
fn truncate_is_idempotent() {
    let mut rng = rng(11);
    let a = TensorTrain::random(&[3, 3, 3, 3, 3], &[3, 4, 4, 3], &mut rng).unwrap();
    let once = a.truncate(1e-3, usize::MAX).unwrap();
    let twice = once.truncate(1e-3, usize::MAX).unwrap();
    assert_eq!(once.ranks(), twice.ranks());
    assert_close(&naive_dense(&twice), &naive_dense(&once), 1e-12);
}

#[test]
fn truncation_bound_over_tolerances() {
    let mut rng = rng(12);
    for _ in 0..5 {
        let a = TensorTrain::random(&[3; 6], &[8; 5], &mut rng).unwrap();
        let dense = naive_dense(&a);
        let norm = frob(&dense);
        for e in 2..=10 {
            let tol = 10f64.powi(-e);
            let t = a.truncate(tol, usize::MAX).unwrap();
            let diff: Vec<f64> = naive_dense(&t).iter().zip(&dense).map(|(x, y)| x - y).collect();
            assert!(frob(&diff) <= 5f64.sqrt() * tol * norm);
        }
    }
}

#[test]
fn marginals_survive_lossless_truncation() {
    let mut rng = rng(13);
    let a = TensorTrain::random(&[2, 3, 2, 3], &[4, 5, 3], &mut rng).unwrap();
    let t = a.truncate(0.0, usize::MAX).unwrap();
    for (x, y) in a.marginals().iter().zip(t.marginals()) {
        for (p, q) in x.iter().zip(y.iter()) {
            assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
        }
    }
}
