#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tensor_train::TensorTrain;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Converts a 1-based multi-index to the library's 0-based convention.
pub fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&k| k - 1).collect()
}

/// Every multi-index of the grid, last index fastest.
pub fn grid(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Entry of a tensor train by explicit summation over the bond indices,
/// carried as a running row vector with plain loops.
pub fn naive_entry(tt: &TensorTrain, idx: &[usize]) -> f64 {
    let mut row = vec![1.0];
    for (core, &k) in tt.cores().iter().zip(idx) {
        let g = core.data();
        let (l, _, r) = g.dim();
        let mut next = vec![0.0; r];
        for (b, nb) in next.iter_mut().enumerate() {
            for a in 0..l {
                *nb += row[a] * g[[a, k, b]];
            }
        }
        row = next;
    }
    row[0]
}

/// Full tensor as a flat vector in grid order.
pub fn naive_dense(tt: &TensorTrain) -> Vec<f64> {
    grid(&tt.dims())
        .iter()
        .map(|idx| naive_entry(tt, idx))
        .collect()
}

pub fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Entrywise agreement to `rel` relative to the largest entry of `b`.
pub fn assert_close(a: &[f64], b: &[f64], rel: f64) {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let err = max_abs_diff(a, b);
    assert!(
        err <= rel * scale,
        "max deviation {err:e} exceeds {rel:e} x {scale:e}"
    );
}

/// Random dims and interior ranks within the given bounds.
pub fn random_shape<R: Rng>(rng: &mut R, max_order: usize, max_dim: usize, max_rank: usize) -> (Vec<usize>, Vec<usize>) {
    let order = rng.random_range(1..=max_order);
    let dims: Vec<usize> = (0..order).map(|_| rng.random_range(1..=max_dim)).collect();
    let ranks: Vec<usize> = (1..order).map(|_| rng.random_range(1..=max_rank)).collect();
    (dims, ranks)
}

/// Random TT whose entries lie in `[lo, hi]`, made by an affine map of a
/// random TT (rank grows by one).
pub fn random_in_range<R: Rng>(dims: &[usize], ranks: &[usize], lo: f64, hi: f64, rng: &mut R) -> TensorTrain {
    let b = TensorTrain::random(dims, ranks, rng).unwrap();
    let vals = naive_dense(&b);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s = (hi - lo) / (max - min);
    b.scale(s)
        .add(&TensorTrain::constant(dims, lo - min * s).unwrap())
        .unwrap()
}
