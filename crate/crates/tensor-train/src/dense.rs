use crate::error::{Result, TtError};

/// Largest number of elements a [`DenseTensor`] may hold unless a larger
/// budget is passed explicitly.
pub const DEFAULT_DENSE_BUDGET: usize = 1 << 24;

/// Explicit multiway array in row-major order (last index fastest).
///
/// Only meant for small problems where exhaustive enumeration is used as
/// an oracle for the tensor-train code paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn checked_len(dims: &[usize], budget: usize) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(TtError::Shape(format!("invalid dense dimensions {dims:?}")));
    }
    let requested = dims.iter().map(|&n| n as u128).product::<u128>();
    if requested > budget as u128 {
        return Err(TtError::Capacity { requested, budget });
    }
    Ok(requested as usize)
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims, DEFAULT_DENSE_BUDGET.max(data.len()))?;
        if len != data.len() {
            return Err(TtError::Shape(format!(
                "dense data has {} elements, dimensions {:?} need {}",
                data.len(),
                dims,
                len
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims, DEFAULT_DENSE_BUDGET)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Fills the tensor by calling `f` on every multi-index in row-major order.
    pub fn from_fn(dims: &[usize], f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        Self::from_fn_with_budget(dims, DEFAULT_DENSE_BUDGET, f)
    }

    pub fn from_fn_with_budget(
        dims: &[usize],
        budget: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let len = checked_len(dims, budget)?;
        let mut data = Vec::with_capacity(len);
        for idx in multi_indices(dims) {
            data.push(f(&idx));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() || idx.iter().zip(&self.dims).any(|(&k, &n)| k >= n) {
            return Err(TtError::IndexOutOfRange {
                index: idx.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(idx
            .iter()
            .zip(&self.dims)
            .fold(0usize, |acc, (&k, &n)| acc * n + k))
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.linear_index(idx)?])
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(TtError::Shape(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Iterates over all multi-indices of a grid in row-major order.
pub fn multi_indices(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = if dims.contains(&0) {
        0
    } else {
        dims.iter().product()
    };
    let mut current = vec![0usize; dims.len()];
    let mut emitted = 0usize;
    std::iter::from_fn(move || {
        if emitted == total {
            return None;
        }
        let out = current.clone();
        emitted += 1;
        for axis in (0..dims.len()).rev() {
            current[axis] += 1;
            if current[axis] < dims[axis] {
                break;
            }
            current[axis] = 0;
        }
        Some(out)
    })
}
