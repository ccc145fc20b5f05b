//! Model-agnostic log-posterior pipeline: prior and likelihood tensor
//! trains, exponentiation by cross approximation, marginals and MAP
//! decisions.

use ndarray::{Array1, Array3};
use tensor_train::cross::{cross, CrossConfig, CrossVariant};
use tensor_train::{exp_taylor, Core, TensorTrain, TtError, UNBOUNDED_RANK};

use crate::error::{InferError, Result};

/// Rounding tolerance of the Taylor initialisation; the rank cap is the
/// binding constraint there.
pub const TAYLOR_TOL: f64 = 1e-12;

/// Log-domain slack below the ascent mode within which a cross decision is
/// accepted without a seeded rerun.
const MODE_SLACK: f64 = 1e-9;

/// Mode re-estimates after an overflowing exponential.
const MAX_RESTARTS: usize = 8;

/// Unnormalised log-posterior `Λ(x)` over `N_T` symbols from a common
/// alphabet; index `k` of every mode stands for `alphabet[k]`.
#[derive(Debug, Clone)]
pub struct LogPosterior {
    pub tt: TensorTrain,
    pub alphabet: Vec<f64>,
}

impl LogPosterior {
    pub fn new(tt: TensorTrain, alphabet: Vec<f64>) -> Result<Self> {
        let l = alphabet.len();
        if l == 0 || tt.dims().iter().any(|&n| n != l) {
            return Err(InferError::Shape(format!(
                "dimensions {:?} do not match an alphabet of size {l}",
                tt.dims()
            )));
        }
        Ok(Self { tt, alphabet })
    }

    pub fn n_modes(&self) -> usize {
        self.tt.order()
    }

    /// Adds the log-prior `v` (one entry per symbol) to every mode.
    pub fn with_prior(self, v: &[f64]) -> Result<Self> {
        let prior = build_prior_tt(v, self.n_modes())?;
        let tt = self.tt.add(&prior)?;
        Self::new(tt, self.alphabet)
    }
}

/// Symbol-wise posterior marginals, one probability vector per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    rows: Vec<Array1<f64>>,
}

impl MarginalTable {
    /// Normalises each row after clamping negative entries to zero.
    pub fn from_unnormalized(rows: Vec<Array1<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (mode, mut q) in rows.into_iter().enumerate() {
            q.mapv_inplace(|x| if x > 0.0 { x } else { 0.0 });
            let total = q.sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(InferError::InferenceFailure { mode, max_rank: None });
            }
            q /= total;
            out.push(q);
        }
        Ok(Self { rows: out })
    }

    pub fn rows(&self) -> &[Array1<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Array1<f64> {
        &self.rows[i]
    }

    pub fn n_modes(&self) -> usize {
        self.rows.len()
    }

    /// Largest absolute entrywise difference.
    pub fn linf_distance(&self, other: &MarginalTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Per-mode argmax; ties go to the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|q| {
                let mut best = 0;
                for (k, &x) in q.iter().enumerate() {
                    if x > q[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// Per-mode difference between the largest and second largest entry.
    pub fn gaps(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|q| {
                let mut v = q.to_vec();
                v.sort_by(|a, b| b.total_cmp(a));
                if v.len() < 2 {
                    v[0]
                } else {
                    v[0] - v[1]
                }
            })
            .collect()
    }
}

/// Rank-2 tensor train of `Σ_i v[k_i]` over `n_modes` modes.
pub fn build_prior_tt(v: &[f64], n_modes: usize) -> Result<TensorTrain> {
    let l = v.len();
    if l == 0 || n_modes == 0 {
        return Err(InferError::Shape("prior needs symbols and modes".into()));
    }
    if n_modes == 1 {
        return Ok(TensorTrain::rank_one(&[v.to_vec()])?);
    }
    let first = Array3::from_shape_fn((1, l, 2), |(_, j, b)| if b == 0 { 1.0 } else { v[j] });
    let middle = Array3::from_shape_fn((2, l, 2), |(a, j, b)| match (a, b) {
        (0, 1) => v[j],
        (0, 0) | (1, 1) => 1.0,
        _ => 0.0,
    });
    let last = Array3::from_shape_fn((2, l, 1), |(a, j, _)| if a == 0 { v[j] } else { 1.0 });
    let mut cores = vec![Core::new(first)?];
    for _ in 1..n_modes - 1 {
        cores.push(Core::new(middle.clone())?);
    }
    cores.push(Core::new(last)?);
    Ok(TensorTrain::new(cores)?)
}

/// Sums log-likelihood terms in a balanced pairwise tree, rounding each
/// partial sum with relative tolerance `tol`.
pub fn sum_loglikelihood_tts(terms: &[TensorTrain], tol: f64) -> Result<TensorTrain> {
    let Some(first) = terms.first() else {
        return Err(InferError::Shape("no log-likelihood terms".into()));
    };
    if let Some(bad) = terms.iter().find(|t| t.dims() != first.dims()) {
        return Err(InferError::Shape(format!(
            "term dimensions {:?} differ from {:?}",
            bad.dims(),
            first.dims()
        )));
    }
    if terms.len() == 1 {
        return Ok(first.clone());
    }
    let mut level: Vec<TensorTrain> = terms.to_vec();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.add(&b)?.truncate(tol, UNBOUNDED_RANK)?),
                None => next.push(a),
            }
        }
        level = next;
    }
    Ok(level.pop().expect("one term left"))
}

/// Best assignment found by coordinate ascent on `tt`, started from the
/// per-mode argmax of its marginals. Returns the index and its value.
pub fn greedy_max(tt: &TensorTrain) -> (Vec<usize>, f64) {
    let start: Vec<usize> = tt
        .marginals()
        .iter()
        .map(|m| {
            let mut best = 0;
            for k in 1..m.len() {
                if m[k] > m[best] {
                    best = k;
                }
            }
            best
        })
        .collect();
    coordinate_ascent(tt, start)
}

/// Single-mode coordinate ascent on `tt` from `x` until no mode changes.
/// Returns the final index and its value.
pub fn coordinate_ascent(tt: &TensorTrain, mut x: Vec<usize>) -> (Vec<usize>, f64) {
    let n = tt.order();
    let dims = tt.dims();
    let mut value = f64::NEG_INFINITY;
    for _ in 0..2 * n.max(1) {
        // suffix[i] = G_i(x_i) ... G_N(x_N) as a column vector
        let mut suffix = vec![Array1::<f64>::ones(1); n + 1];
        for i in (0..n).rev() {
            suffix[i] = tt.core(i).slice(x[i]).dot(&suffix[i + 1]);
        }
        let mut prefix = Array1::<f64>::ones(1);
        let mut changed = false;
        for i in 0..n {
            let core = tt.core(i);
            let mut best = (x[i], f64::NEG_INFINITY);
            for k in 0..dims[i] {
                let val = prefix.dot(&core.slice(k).dot(&suffix[i + 1]));
                if val > best.1 || (k == x[i] && val >= best.1) {
                    best = (k, val);
                }
            }
            if best.0 != x[i] {
                changed = true;
                x[i] = best.0;
            }
            value = best.1;
            prefix = prefix.dot(&core.slice(x[i]));
        }
        if !changed {
            break;
        }
    }
    (x, value)
}

/// Settings for exponentiation and marginalisation.
#[derive(Debug, Clone)]
pub struct InferenceSettings {
    pub cross: CrossConfig,
    pub taylor_p: usize,
    pub taylor_max_rank: usize,
    pub variant: CrossVariant,
}

/// Posterior marginals of `exp(Λ)` and the largest bond rank of the
/// exponentiated tensor train.
///
/// A truncated Taylor series of `exp(Λ)` supplies the initial pivots. Its
/// largest entries lie at the extremes of `Λ`, so coordinate ascent from
/// its greedy maximum, together with ascent from the marginal argmax,
/// estimates `max Λ`. The cross approximation then exponentiates `Λ`
/// shifted by that estimate.
pub fn infer_marginals(lp: &LogPosterior, settings: &InferenceSettings) -> Result<(MarginalTable, usize)> {
    infer_marginals_from(lp, settings, &[])
}

/// [`infer_marginals`] with extra starting points for the ascent that
/// estimates `max Λ`, such as the decision of a cheap detector.
pub fn infer_marginals_from(
    lp: &LogPosterior,
    settings: &InferenceSettings,
    starts: &[Vec<usize>],
) -> Result<(MarginalTable, usize)> {
    let dims = lp.tt.dims();
    if let Some(bad) = starts.iter().find(|x| x.len() != dims.len() || x.iter().zip(&dims).any(|(&k, &n)| k >= n)) {
        return Err(InferError::Shape(format!("start {bad:?} is not an index of {dims:?}")));
    }
    let taylor = exp_taylor(&lp.tt, settings.taylor_p, settings.taylor_max_rank, TAYLOR_TOL)?;
    let (start, _) = greedy_max(&taylor);
    let (mut mode, mut top) = greedy_max(&lp.tt);
    for x in std::iter::once(start).chain(starts.iter().cloned()) {
        let (x, value) = coordinate_ascent(&lp.tt, x);
        if value > top {
            mode = x;
            top = value;
        }
    }
    let mut restarts = 0;
    loop {
        match infer_shifted(lp, settings, &taylor, &mode, top) {
            // the cross met an entry so far above the estimate that its
            // exponential overflowed; ascend from there and start over
            Err(InferError::Tt(TtError::NonFinite { index, .. })) if restarts < MAX_RESTARTS => {
                let (x, value) = coordinate_ascent(&lp.tt, index.clone());
                if !(value > top) {
                    return Err(InferError::Tt(TtError::NonFinite { index, value }));
                }
                mode = x;
                top = value;
                restarts += 1;
            }
            other => return other,
        }
    }
}

fn infer_shifted(
    lp: &LogPosterior,
    settings: &InferenceSettings,
    taylor: &TensorTrain,
    mode: &[usize],
    top: f64,
) -> Result<(MarginalTable, usize)> {
    let shift = if top.is_finite() { top } else { 0.0 };
    let dims = lp.tt.dims();
    let centred = if shift == 0.0 {
        lp.tt.clone()
    } else {
        lp.tt.add(&TensorTrain::constant(&dims, -shift)?)?
    };
    let run = |init: &TensorTrain| -> Result<(MarginalTable, usize, f64)> {
        let out = cross(f64::exp, &centred, init, &settings.cross, settings.variant)?;
        let rank = out.tt.max_rank();
        let table = MarginalTable::from_unnormalized(out.tt.marginals()).map_err(|e| match e {
            InferError::InferenceFailure { mode, .. } => InferError::InferenceFailure {
                mode,
                max_rank: Some(rank),
            },
            e => e,
        })?;
        let score = lp.tt.eval(&table.argmax())?;
        Ok((table, rank, score))
    };
    // A cross run whose decision scores below the ascent mode has lost the
    // mode. It is repeated from an initial guess that contains the mode,
    // first on top of the Taylor series and then, if the series swamps it,
    // on a flat background. The best-scoring decision is kept.
    let mut best: Option<(MarginalTable, usize, f64)> = None;
    let mut last_err = None;
    for attempt in 0..3 {
        let init = match attempt {
            0 => taylor.clone(),
            1 => with_mode(taylor, mode)?,
            _ => with_mode(&TensorTrain::ones(&dims)?, mode)?,
        };
        match no_overflow(run(&init))? {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.2 > b.2) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
        if best.as_ref().is_some_and(|b| b.2 >= top - MODE_SLACK) {
            break;
        }
    }
    match (best, last_err) {
        (Some((table, rank, _)), _) => Ok((table, rank)),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("every attempt yields a result or an error"),
    }
}

// Lifts an overflow out of `r` so that it ends the attempt.
fn no_overflow<T>(r: Result<T>) -> Result<Result<T>> {
    match r {
        Err(e @ InferError::Tt(TtError::NonFinite { .. })) => Err(e),
        r => Ok(r),
    }
}

// `t` plus the indicator of `mode` at weight `|t|`, so the initial pivots
// of the cross approximation see the estimated mode.
fn with_mode(t: &TensorTrain, mode: &[usize]) -> Result<TensorTrain> {
    let weight = t.norm()?;
    if !(weight.is_finite() && weight > 0.0) {
        return Ok(t.clone());
    }
    let vectors: Vec<Vec<f64>> = t
        .dims()
        .iter()
        .zip(mode)
        .enumerate()
        .map(|(i, (&n, &m))| {
            let mut v = vec![0.0; n];
            v[m] = if i == 0 { weight } else { 1.0 };
            v
        })
        .collect();
    Ok(t.add(&TensorTrain::rank_one(&vectors)?)?)
}

/// Symbol-wise MAP decision; ties go to the lowest alphabet index.
pub fn map_decision(m: &MarginalTable, alphabet: &[f64]) -> Vec<f64> {
    m.argmax().into_iter().map(|k| alphabet[k]).collect()
}
