use std::collections::HashMap;

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Result, TtError};
use crate::linalg::{left_solve, qr};
use crate::maxvol::maxvol;

const RETRIES: usize = 3;
const MAX_ALTERNATIONS: usize = 20;

/// Skeleton decomposition `B ≈ C B(I, J)^{-1} R` of an `n x m` matrix.
#[derive(Debug, Clone)]
pub struct MatrixCross {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// `B(:, J)`, `n x r`.
    pub c: Array2<f64>,
    /// `B(I, J)^{-1}`, `r x r`.
    pub core: Array2<f64>,
    /// `B(I, :)`, `r x m`.
    pub r: Array2<f64>,
    /// Distinct entries of `B` that were requested.
    pub n_evals: usize,
}

impl MatrixCross {
    pub fn reconstruct(&self) -> Array2<f64> {
        self.c.dot(&self.core).dot(&self.r)
    }
}

/// Rank-`r` cross approximation of the matrix with entries `entry(i, j)`.
///
/// Starts from `r` random columns and alternates `maxvol` on the current
/// columns and rows until the pivot sets stop changing. A singular pivot
/// block restarts from fresh random columns, at most three times.
pub fn matrix_cross<R, F>(
    mut entry: F,
    n: usize,
    m: usize,
    r: usize,
    rng: &mut R,
) -> Result<MatrixCross>
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize) -> f64,
{
    if r == 0 || r > n.min(m) {
        return Err(TtError::Shape(format!(
            "rank {r} impossible for a {n} x {m} matrix"
        )));
    }
    let mut sampler = Sampler {
        entry: &mut entry,
        cache: HashMap::new(),
    };
    let mut last_err = None;
    for _ in 0..=RETRIES {
        let cols = sample(rng, m, r).into_vec();
        match alternate(&mut sampler, n, m, r, cols) {
            Ok((rows, cols)) => {
                let c = Array2::from_shape_fn((n, r), |(i, j)| sampler.get(i, cols[j]));
                let rmat = Array2::from_shape_fn((r, m), |(i, j)| sampler.get(rows[i], j));
                let block = c.select(Axis(0), &rows);
                match left_solve(&block, &Array2::eye(r)) {
                    Ok(core) => {
                        return Ok(MatrixCross {
                            rows,
                            cols,
                            c,
                            core,
                            r: rmat,
                            n_evals: sampler.cache.len(),
                        })
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(TtError::Degenerate(format!(
        "matrix cross failed after {RETRIES} restarts: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

struct Sampler<'f, F> {
    entry: &'f mut F,
    cache: HashMap<(usize, usize), f64>,
}

impl<F: FnMut(usize, usize) -> f64> Sampler<'_, F> {
    fn get(&mut self, i: usize, j: usize) -> f64 {
        let entry = &mut self.entry;
        *self.cache.entry((i, j)).or_insert_with(|| entry(i, j))
    }
}

fn alternate<F: FnMut(usize, usize) -> f64>(
    sampler: &mut Sampler<'_, F>,
    n: usize,
    m: usize,
    r: usize,
    mut cols: Vec<usize>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rows: Vec<usize> = Vec::new();
    for _ in 0..MAX_ALTERNATIONS {
        let c = Array2::from_shape_fn((n, r), |(i, j)| sampler.get(i, cols[j]));
        let new_rows = maxvol(&qr(&c)?.0)?;
        let rt = Array2::from_shape_fn((m, r), |(j, i)| sampler.get(new_rows[i], j));
        let new_cols = maxvol(&qr(&rt)?.0)?;
        let stable = same_set(&new_rows, &rows) && same_set(&new_cols, &cols);
        rows = new_rows;
        cols = new_cols;
        if stable {
            break;
        }
    }
    Ok((rows, cols))
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}
