//! Selection of a quasi-dominant square submatrix.

use lax::layout::MatrixLayout;
use lax::Lapack;
use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};

use crate::error::{Result, TtError};
use crate::linalg::right_solve;

/// Dominance slack: iteration stops once every coefficient is at most `1 + DELTA`.
pub const DELTA: f64 = 1e-2;

/// Swap budget for one call.
pub const MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Maxvol {
    /// Selected row indices; `rows[j]` is the row standing in for column `j`.
    pub rows: Vec<usize>,
    /// `|det|` growth factor of every accepted swap, each `> 1 + delta`.
    pub swap_gains: Vec<f64>,
    /// `M * M[rows, :]^{-1}` at termination.
    pub coefficients: Array2<f64>,
}

/// Rows of the `n x r` matrix `m` spanning a quasi-maximal volume submatrix.
pub fn maxvol(m: &Array2<f64>) -> Result<Vec<usize>> {
    Ok(maxvol_with(m, DELTA, MAX_ITERS)?.rows)
}

/// `maxvol` with explicit slack and swap budget.
///
/// Starts from the rows chosen by Gaussian elimination with partial
/// pivoting and then repeatedly swaps in the row holding the largest
/// coefficient of `M * M[rows, :]^{-1}`.
pub fn maxvol_with(m: &Array2<f64>, delta: f64, max_iters: usize) -> Result<Maxvol> {
    let (n, r) = m.dim();
    if r == 0 || n < r {
        return Err(TtError::Shape(format!(
            "maxvol needs a tall matrix, got {n} x {r}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TtError::Degenerate("maxvol input has non-finite entries".into()));
    }
    let mut rows = pivoted_rows(m)?;
    let sub = Array2::from_shape_fn((r, r), |(a, b)| m[[rows[a], b]]);
    let mut coef = right_solve(m, &sub)?;
    let mut swap_gains = Vec::new();

    for _ in 0..max_iters {
        let (mut bi, mut bj, mut best) = (0, 0, 0.0f64);
        for ((i, j), &v) in coef.indexed_iter() {
            if v.abs() > best {
                (bi, bj, best) = (i, j, v.abs());
            }
        }
        if best <= 1.0 + delta {
            break;
        }
        swap_gains.push(best);
        rows[bj] = bi;
        let pivot = coef[[bi, bj]];
        let col: Array1<f64> = coef.column(bj).to_owned();
        let mut row: Array1<f64> = coef.row(bi).to_owned();
        row[bj] -= 1.0;
        row /= pivot;
        general_mat_mul(
            -1.0,
            &col.insert_axis(Axis(1)),
            &row.insert_axis(Axis(0)),
            1.0,
            &mut coef,
        );
    }
    Ok(Maxvol {
        rows,
        swap_gains,
        coefficients: coef,
    })
}

// Rows picked by LU with partial pivoting (LAPACK getrf on the n x r
// matrix in column-major order).
fn pivoted_rows(m: &Array2<f64>) -> Result<Vec<usize>> {
    let (n, r) = m.dim();
    let mut data = m.t().as_standard_layout().into_owned().into_raw_vec_and_offset().0;
    let layout = MatrixLayout::F {
        col: r as i32,
        lda: n as i32,
    };
    let ipiv = f64::lu(layout, &mut data).map_err(|e| TtError::Degenerate(e.to_string()))?;
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tiny = scale * f64::EPSILON * (n.max(r) as f64);
    let mut perm: Vec<usize> = (0..n).collect();
    for (j, &p) in ipiv.iter().enumerate() {
        if data[j + j * n].abs() <= tiny {
            return Err(TtError::Degenerate(format!(
                "matrix is numerically rank deficient at column {j}"
            )));
        }
        perm.swap(j, p as usize - 1);
    }
    perm.truncate(r);
    Ok(perm)
}
