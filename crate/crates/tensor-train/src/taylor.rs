use ndarray::{s, Array2, Array3, ArrayView3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::qr;
use crate::round::truncate_left_orthogonal;
use crate::tensor::{Core, TensorTrain};

/// Extra sketch columns when a Horner step is pre-compressed.
const SKETCH_OVERSAMPLE: usize = 10;

/// Elementwise `exp(a)` through the order-`p` Taylor polynomial, evaluated
/// in Horner form `b <- 1 + (a ∘ b) / k` for `k = p, ..., 1`. Every step is
/// rounded with `truncate(tol, max_rank)` to keep ranks bounded.
///
/// When a step's rank would exceed the cap by far, it is first compressed
/// by a randomised rounding to `max_rank + 10` that works on the factors of
/// the Hadamard product directly, and the SVD rounding only runs if that
/// leaves a rank above `max_rank`. The sketch uses a fixed seed, so the
/// result stays deterministic.
pub fn exp_taylor(a: &TensorTrain, p: usize, max_rank: usize, tol: f64) -> Result<TensorTrain> {
    let ones = TensorTrain::ones(&a.dims())?;
    let mut b = ones.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
    let sketch = max_rank.saturating_add(SKETCH_OVERSAMPLE);
    for k in (1..=p).rev() {
        let c = 1.0 / k as f64;
        let full_rank = 1 + a.max_rank().saturating_mul(b.max_rank());
        b = if full_rank > sketch.saturating_mul(2) {
            // the sketched step returns left-orthogonal cores, and its
            // ranks never exceed the bond dimension bounds
            let next = sketched_horner_step(a, &b, c, sketch, &mut rng)?;
            if next.max_rank() <= max_rank {
                next
            } else {
                truncate_left_orthogonal(next.into_cores(), tol, max_rank)?
            }
        } else {
            ones.add(&a.hadamard(&b)?.scale(c))?.truncate(tol, max_rank)?
        };
    }
    Ok(b)
}

// Randomised rounding of `1 + c (a ∘ b)` to ranks at most `rank`, the same
// algorithm as `TensorTrain::round_randomized` but without forming the
// Kronecker cores. State index 0 of every bond is the all-ones term, and
// `1 + p rb + q` is the pair `(p, q)` of bond indices of `a` and `b`.
fn sketched_horner_step<R: Rng + ?Sized>(
    a: &TensorTrain,
    b: &TensorTrain,
    c: f64,
    rank: usize,
    rng: &mut R,
) -> Result<TensorTrain> {
    let n_cores = a.order();
    if n_cores == 1 {
        let (ca, cb) = (a.core(0).data(), b.core(0).data());
        let data = Array3::from_shape_fn(ca.dim(), |(_, k, _)| 1.0 + c * ca[[0, k, 0]] * cb[[0, k, 0]]);
        return TensorTrain::new(vec![Core::new(data)?]);
    }
    let last = n_cores - 1;
    let dims = a.dims();
    // w[i]: bond i contracted with cores i.. and the sketch, (1 + ra rb) x l,
    // where l never exceeds the number of entries right of the bond.
    let mut w: Vec<Array2<f64>> = vec![Array2::ones((1, 1)); n_cores + 1];
    let mut l_next = 1;
    let mut right_size = 1usize;
    for i in (1..n_cores).rev() {
        right_size = right_size.saturating_mul(dims[i]);
        let (ca, cb) = (a.core(i).data(), b.core(i).data());
        let (ra, n, ra1) = ca.dim();
        let (rb, _, rb1) = cb.dim();
        let mut y = Array2::<f64>::zeros((1 + ra * rb, n * l_next));
        if i == last {
            for k in 0..n {
                y[[0, k]] = 1.0;
                for p in 0..ra {
                    for q in 0..rb {
                        y[[1 + p * rb + q, k]] = ca[[p, k, 0]] * cb[[q, k, 0]];
                    }
                }
            }
        } else {
            // rows s * rb1 * l + t * l + j hold W_j[s, t]
            let wr = w[i + 1]
                .slice(s![1.., ..])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((ra1, rb1 * l_next))
                .expect("element count preserved");
            for k in 0..n {
                // t1[p, t, j] = sum_s A_k[p, s] W_j[s, t]
                let t1 = ca.slice(s![.., k, ..]).dot(&wr);
                let t1 = t1.to_shape((ra, rb1, l_next)).expect("standard layout");
                let t1 = t1
                    .permuted_axes([1, 0, 2])
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((rb1, ra * l_next))
                    .expect("element count preserved");
                // t2[q, p, j] = sum_t B_k[q, t] t1[p, t, j]
                let t2 = cb.slice(s![.., k, ..]).dot(&t1);
                for q in 0..rb {
                    for p in 0..ra {
                        for j in 0..l_next {
                            y[[1 + p * rb + q, k * l_next + j]] = t2[[q, p * l_next + j]];
                        }
                    }
                }
                for j in 0..l_next {
                    y[[0, k * l_next + j]] = w[i + 1][[0, j]];
                }
            }
        }
        let l = rank.min(right_size);
        let sketch = Array2::from_shape_simple_fn((l, n * l_next), || rng.sample(StandardNormal));
        w[i] = y.dot(&sketch.t());
        l_next = l;
    }

    let mut cores = Vec::with_capacity(n_cores);
    let (ca, cb) = (a.core(0).data(), b.core(0).data());
    let (_, n0, ra0) = ca.dim();
    let rb0 = cb.dim().2;
    let mut carry = Array3::<f64>::zeros((1, n0, 1 + ra0 * rb0));
    for k in 0..n0 {
        carry[[0, k, 0]] = 1.0;
        for p in 0..ra0 {
            for q in 0..rb0 {
                carry[[0, k, 1 + p * rb0 + q]] = c * ca[[0, k, p]] * cb[[0, k, q]];
            }
        }
    }
    for i in 0..last {
        let (l, n, r) = carry.dim();
        let unf = carry.into_shape_with_order((l * n, r)).expect("standard layout");
        let (q, _) = qr(&unf.dot(&w[i + 1]))?;
        let m = q.t().dot(&unf);
        cores.push(Core::from_left_unfolding(q, l, n));
        carry = advance(&m, a.core(i + 1).data().view(), b.core(i + 1).data().view(), i + 1 == last);
    }
    cores.push(Core::new(carry)?);
    TensorTrain::new(cores)
}

// `m` (l x (1 + ra rb)) times the next core of `1 + c (a ∘ b)`.
fn advance(m: &Array2<f64>, ca: ArrayView3<f64>, cb: ArrayView3<f64>, is_last: bool) -> Array3<f64> {
    let (ra, n, ra1) = ca.dim();
    let (rb, _, rb1) = cb.dim();
    let l = m.nrows();
    if is_last {
        return Array3::from_shape_fn((l, n, 1), |(s_, k, _)| {
            let mut v = m[[s_, 0]];
            for p in 0..ra {
                for q in 0..rb {
                    v += m[[s_, 1 + p * rb + q]] * ca[[p, k, 0]] * cb[[q, k, 0]];
                }
            }
            v
        });
    }
    let mut out = Array3::<f64>::zeros((l, n, 1 + ra1 * rb1));
    // rows s * ra + p hold M_s[p, ..]
    let mr = m
        .slice(s![.., 1..])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((l * ra, rb))
        .expect("element count preserved");
    for k in 0..n {
        // t1[s, p, q1] = sum_q M_s[p, q] B_k[q, q1]
        let t1 = mr.dot(&cb.slice(s![.., k, ..]));
        let t1 = t1.to_shape((l, ra, rb1)).expect("standard layout");
        let t1 = t1
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((ra, l * rb1))
            .expect("element count preserved");
        // t2[p1, s, q1] = sum_p A_k[p, p1] t1[p, s, q1]
        let t2 = ca.slice(s![.., k, ..]).t().dot(&t1);
        for s_ in 0..l {
            out[[s_, k, 0]] = m[[s_, 0]];
            for p1 in 0..ra1 {
                for q1 in 0..rb1 {
                    out[[s_, k, 1 + p1 * rb1 + q1]] = t2[[p1, s_ * rb1 + q1]];
                }
            }
        }
    }
    out
}
