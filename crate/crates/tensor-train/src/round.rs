use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::DenseTensor;
use crate::error::Result;
use crate::linalg::{chop, qr, svd};
use crate::tensor::{Core, TensorTrain};

impl TensorTrain {
    /// Left-orthogonalises cores `0..N-1` by successive QR factorisations.
    /// The represented tensor is unchanged and its norm moves into the last
    /// core.
    pub fn orthogonalize_left(&self) -> Result<TensorTrain> {
        let mut cores = self.cores().to_vec();
        for i in 0..cores.len().saturating_sub(1) {
            let (l, n, _) = cores[i].data().dim();
            let (q, r) = qr(&cores[i].left_unfolding())?;
            cores[i] = Core::from_left_unfolding(q, l, n);
            let (_, n1, r1) = cores[i + 1].data().dim();
            let next = r.dot(&cores[i + 1].right_unfolding());
            cores[i + 1] = Core::from_right_unfolding(next, n1, r1);
        }
        Ok(TensorTrain::from_cores_unchecked(cores))
    }

    /// Frobenius norm, computed from the last core after orthogonalisation.
    pub fn norm(&self) -> Result<f64> {
        let ortho = self.orthogonalize_left()?;
        let last = ortho.core(ortho.order() - 1);
        Ok(last.data().iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// SVD rounding. A left-to-right QR sweep is followed by a right-to-left
    /// sweep of truncated SVDs, each discarding a tail of singular values of
    /// norm at most `tol * |a| / sqrt(N - 1)`, so the total Frobenius error is
    /// at most `tol * |a|`. Ranks never exceed `max_rank`.
    pub fn truncate(&self, tol: f64, max_rank: usize) -> Result<TensorTrain> {
        let n_cores = self.order();
        if n_cores == 1 {
            return Ok(self.clone());
        }
        truncate_left_orthogonal(self.orthogonalize_left()?.into_cores(), tol, max_rank)
    }

    /// Randomised rounding to bond ranks at most `rank`.
    ///
    /// The tensor is contracted from the right with a Gaussian tensor train
    /// of ranks `rank`, and the resulting sketches give the left bases by
    /// one QR per core. Costs `O(N n r^2 rank)` instead of the `O(N n r^3)`
    /// of [`TensorTrain::truncate`], which matters when `r` is much larger
    /// than `rank`.
    pub fn round_randomized<R: Rng + ?Sized>(&self, rank: usize, rng: &mut R) -> Result<TensorTrain> {
        let n_cores = self.order();
        let rank = rank.max(1);
        if n_cores == 1 {
            return Ok(self.clone());
        }
        // w[i]: contraction of cores i.. with the sketch, r_i x l_i.
        let mut w = vec![Array2::<f64>::ones((1, 1)); n_cores + 1];
        let mut l_next = 1;
        for i in (1..n_cores).rev() {
            let core = self.core(i);
            let (ra, n, _) = core.data().dim();
            let sketch = Array2::from_shape_simple_fn((rank, n * l_next), || rng.sample(StandardNormal));
            let xw = core
                .left_unfolding()
                .dot(&w[i + 1])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((ra, n * l_next))
                .expect("element count preserved");
            w[i] = xw.dot(&sketch.t());
            l_next = rank;
        }
        let mut cores = Vec::with_capacity(n_cores);
        let mut carry = self.core(0).clone();
        for i in 0..n_cores - 1 {
            let (l, n, _) = carry.data().dim();
            let unf = carry.left_unfolding();
            let (q, _) = qr(&unf.dot(&w[i + 1]))?;
            let m = q.t().dot(&unf);
            cores.push(Core::from_left_unfolding(q, l, n));
            let next = self.core(i + 1);
            let (_, n1, r1) = next.data().dim();
            carry = Core::from_right_unfolding(m.dot(&next.right_unfolding()), n1, r1);
        }
        cores.push(carry);
        Ok(TensorTrain::from_cores_unchecked(cores))
    }

    /// TT-SVD of a dense tensor with relative accuracy `tol`.
    pub fn from_dense(t: &DenseTensor, tol: f64) -> Result<TensorTrain> {
        Self::from_dense_capped(t, tol, usize::MAX)
    }

    /// TT-SVD with an additional rank cap.
    pub fn from_dense_capped(t: &DenseTensor, tol: f64, max_rank: usize) -> Result<TensorTrain> {
        let dims = t.dims();
        let n_cores = dims.len();
        let delta = if n_cores > 1 {
            tol.max(0.0) * t.norm() / ((n_cores - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut cores = Vec::with_capacity(n_cores);
        let mut rest = Array2::from_shape_vec((1, t.len()), t.data().to_vec())
            .expect("length checked by DenseTensor");
        let mut r_prev = 1;
        for (i, &n) in dims.iter().enumerate() {
            let cols = rest.len() / (r_prev * n);
            let m = rest
                .into_shape_with_order((r_prev * n, cols))
                .expect("consistent reshape");
            if i == n_cores - 1 {
                cores.push(Core::from_left_unfolding(m, r_prev, n));
                break;
            }
            let (u, sv, vt) = svd(&m)?;
            let k = chop(&sv, delta, max_rank);
            cores.push(Core::from_left_unfolding(
                u.slice(s![.., ..k]).to_owned(),
                r_prev,
                n,
            ));
            rest = &vt.slice(s![..k, ..]) * &sv.slice(s![..k]).insert_axis(Axis(1));
            rest = rest.as_standard_layout().to_owned();
            r_prev = k;
        }
        Ok(TensorTrain::from_cores_unchecked(cores))
    }
}

/// Right-to-left SVD sweep of [`TensorTrain::truncate`] for cores whose
/// first `N - 1` members are already left-orthogonal.
pub(crate) fn truncate_left_orthogonal(mut cores: Vec<Core>, tol: f64, max_rank: usize) -> Result<TensorTrain> {
    let n_cores = cores.len();
    if n_cores == 1 {
        return Ok(TensorTrain::from_cores_unchecked(cores));
    }
    let norm = cores[n_cores - 1]
        .data()
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let delta = tol.max(0.0) * norm / ((n_cores - 1) as f64).sqrt();
    for i in (1..n_cores).rev() {
        let (_, n, r) = cores[i].data().dim();
        let (u, sv, vt) = svd(&cores[i].right_unfolding())?;
        let k = chop(&sv, delta, max_rank);
        let vt = vt.slice(s![..k, ..]).to_owned();
        cores[i] = Core::from_right_unfolding(vt, n, r);
        let us = &u.slice(s![.., ..k]) * &sv.slice(s![..k]).insert_axis(Axis(0));
        let (lp, np, _) = cores[i - 1].data().dim();
        let prev = cores[i - 1].left_unfolding().dot(&us);
        cores[i - 1] = Core::from_left_unfolding(prev, lp, np);
    }
    Ok(TensorTrain::from_cores_unchecked(cores))
}
