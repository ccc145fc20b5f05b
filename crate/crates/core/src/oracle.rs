//! Exhaustive marginals by enumeration, for desk-scale checks.

use ndarray::Array1;

use crate::error::{InferError, Result};
use crate::posterior::{LogPosterior, MarginalTable};

/// Largest number of assignments the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1 << 20;

/// Exact symbol-wise marginals of `exp(Λ)`, enumerated in the log domain
/// with the maximum subtracted first.
pub fn exact_map_oracle(lp: &LogPosterior) -> Result<MarginalTable> {
    let dims = lp.tt.dims();
    let requested = dims.iter().map(|&n| n as u128).product::<u128>();
    if requested > ORACLE_LIMIT {
        return Err(InferError::Capacity {
            requested,
            limit: ORACLE_LIMIT,
        });
    }
    let dense = lp.tt.to_dense_with_budget(ORACLE_LIMIT as usize)?;
    Ok(marginals_of_log_table(dense.data(), &dims))
}

/// Marginals of `exp(values)` for a row-major table with dimensions `dims`.
pub fn marginals_of_log_table(values: &[f64], dims: &[usize]) -> MarginalTable {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<Array1<f64>> = dims.iter().map(|&n| Array1::zeros(n)).collect();
    let mut idx = vec![0usize; dims.len()];
    for &v in values {
        let w = (v - top).exp();
        for (row, &k) in rows.iter_mut().zip(&idx) {
            row[k] += w;
        }
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    MarginalTable::from_unnormalized(rows).expect("the maximum entry has weight one")
}
