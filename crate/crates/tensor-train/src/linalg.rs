//! Thin wrappers over LAPACK for the small dense factorisations used by
//! rounding and cross.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Factorize, Inverse, JobSvd, QR, SVD, SVDDC};

use crate::error::{Result, TtError};

/// Thin SVD `m = u diag(s) vt` with singular values in decreasing order.
pub(crate) fn svd(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TtError::Linalg("SVD of a matrix with non-finite entries".into()));
    }
    let m = m.as_standard_layout().to_owned();
    match m.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        _ => {
            // gesdd occasionally fails to converge; gesvd is slower but sturdier.
            let (u, s, vt) = m
                .svd(true, true)
                .map_err(|e| TtError::Linalg(e.to_string()))?;
            let (u, vt) = (u.unwrap(), vt.unwrap());
            let k = s.len();
            Ok((
                u.slice_axis(Axis(1), (0..k).into()).to_owned(),
                s,
                vt.slice_axis(Axis(0), (0..k).into()).to_owned(),
            ))
        }
    }
}

/// Number of singular values to keep so that the discarded tail has
/// Euclidean norm at most `delta`, capped by `max_rank` and never below 1.
/// With `delta == 0` every nonzero singular value is kept.
pub(crate) fn chop(s: &Array1<f64>, delta: f64, max_rank: usize) -> usize {
    let n = s.len();
    let mut r = n;
    if delta > 0.0 {
        let mut tail = 0.0;
        while r > 0 {
            let next = tail + s[r - 1] * s[r - 1];
            if next.sqrt() > delta {
                break;
            }
            tail = next;
            r -= 1;
        }
    } else {
        while r > 0 && s[r - 1] == 0.0 {
            r -= 1;
        }
    }
    r.clamp(1, max_rank.max(1)).min(n.max(1))
}

/// Thin QR, `q` has `min(m, n)` orthonormal columns.
pub(crate) fn qr(m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TtError::Linalg("QR of a matrix with non-finite entries".into()));
    }
    m.as_standard_layout()
        .to_owned()
        .qr()
        .map_err(|e| TtError::Linalg(e.to_string()))
}

/// `c * b^{-1}` for square `b`.
pub(crate) fn right_solve(c: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let inv = b
        .factorize()
        .and_then(|lu| lu.inv())
        .map_err(|e| TtError::Degenerate(e.to_string()))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(TtError::Degenerate("singular pivot block".into()));
    }
    Ok(c.dot(&inv))
}

/// `b^{-1} c` for square `b`.
pub(crate) fn left_solve(b: &Array2<f64>, c: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(right_solve(&c.t().to_owned(), &b.t().to_owned())?
        .t()
        .to_owned())
}
