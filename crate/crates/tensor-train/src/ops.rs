use ndarray::{s, Array1, Array2, Array3, Axis};

use crate::error::{Result, TtError};
use crate::tensor::{Core, TensorTrain};

fn same_shape(a: &TensorTrain, b: &TensorTrain) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(TtError::Shape(format!(
            "dimensions {:?} and {:?} differ",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

impl TensorTrain {
    /// Elementwise sum. Interior ranks add up; no rounding is applied.
    pub fn add(&self, other: &TensorTrain) -> Result<TensorTrain> {
        same_shape(self, other)?;
        let last = self.order() - 1;
        let cores = self
            .cores()
            .iter()
            .zip(other.cores())
            .enumerate()
            .map(|(i, (ca, cb))| {
                let (la, n, ra) = ca.data().dim();
                let (lb, _, rb) = cb.data().dim();
                if self.order() == 1 {
                    return Core::new(ca.data() + cb.data());
                }
                let (l, r) = match i {
                    0 => (1, ra + rb),
                    _ if i == last => (la + lb, 1),
                    _ => (la + lb, ra + rb),
                };
                let mut data = Array3::zeros((l, n, r));
                if i == 0 {
                    data.slice_mut(s![.., .., ..ra]).assign(ca.data());
                    data.slice_mut(s![.., .., ra..]).assign(cb.data());
                } else if i == last {
                    data.slice_mut(s![..la, .., ..]).assign(ca.data());
                    data.slice_mut(s![la.., .., ..]).assign(cb.data());
                } else {
                    data.slice_mut(s![..la, .., ..ra]).assign(ca.data());
                    data.slice_mut(s![la.., .., ra..]).assign(cb.data());
                }
                Core::new(data)
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }

    /// Elementwise (Hadamard) product. Each slice is the Kronecker product
    /// of the operand slices, so ranks multiply.
    pub fn hadamard(&self, other: &TensorTrain) -> Result<TensorTrain> {
        same_shape(self, other)?;
        let cores = self
            .cores()
            .iter()
            .zip(other.cores())
            .map(|(ca, cb)| {
                let (la, n, ra) = ca.data().dim();
                let (lb, _, rb) = cb.data().dim();
                let a = ca.data();
                let b = cb.data();
                let data = Array3::from_shape_fn((la * lb, n, ra * rb), |(p, k, q)| {
                    a[[p / lb, k, q / rb]] * b[[p % lb, k, q % rb]]
                });
                Core::new(data)
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }

    /// Multiplies every entry by `lambda` by scaling the first core.
    pub fn scale(&self, lambda: f64) -> TensorTrain {
        let mut cores = self.cores().to_vec();
        let first = cores[0].data() * lambda;
        cores[0] = Core::new(first).expect("shape unchanged");
        TensorTrain::from_cores_unchecked(cores)
    }

    /// Mode-`i` product with `u` of shape `m x n_i`:
    /// `new(.., p, ..) = sum_j u[p, j] old(.., j, ..)`.
    pub fn mode_multiply(&self, i: usize, u: &Array2<f64>) -> Result<TensorTrain> {
        if i >= self.order() {
            return Err(TtError::Shape(format!(
                "mode {i} out of range for order {}",
                self.order()
            )));
        }
        let core = self.core(i);
        let (l, n, r) = core.data().dim();
        if u.ncols() != n {
            return Err(TtError::Shape(format!(
                "matrix has {} columns, mode {i} has dimension {n}",
                u.ncols()
            )));
        }
        let m = u.nrows();
        let mut data = Array3::zeros((l, m, r));
        for a in 0..l {
            let block = core.data().slice(s![a, .., ..]);
            data.slice_mut(s![a, .., ..]).assign(&u.dot(&block));
        }
        let mut cores = self.cores().to_vec();
        cores[i] = Core::new(data)?;
        TensorTrain::new(cores)
    }

    /// Sum over all modes except `i`, contracting the other cores with the
    /// all-ones vector.
    pub fn marginal(&self, i: usize) -> Result<Array1<f64>> {
        if i >= self.order() {
            return Err(TtError::Shape(format!(
                "mode {i} out of range for order {}",
                self.order()
            )));
        }
        let left = self.left_sums();
        let right = self.right_sums();
        Ok(contract_mode(self.core(i), &left[i], &right[i + 1]))
    }

    /// Marginals for every mode from one pair of prefix/suffix sweeps.
    pub fn marginals(&self) -> Vec<Array1<f64>> {
        let left = self.left_sums();
        let right = self.right_sums();
        (0..self.order())
            .map(|i| contract_mode(self.core(i), &left[i], &right[i + 1]))
            .collect()
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        self.left_sums()[self.order()][0]
    }

    // left[i] = row vector of cores 0..i summed over their physical index.
    fn left_sums(&self) -> Vec<Array1<f64>> {
        let mut out = Vec::with_capacity(self.order() + 1);
        out.push(Array1::ones(1));
        for core in self.cores() {
            let summed = core.data().sum_axis(Axis(1));
            let next = out.last().unwrap().dot(&summed);
            out.push(next);
        }
        out
    }

    // right[i] = column vector of cores i..N summed over their physical index.
    fn right_sums(&self) -> Vec<Array1<f64>> {
        let n = self.order();
        let mut out = vec![Array1::ones(1); n + 1];
        for i in (0..n).rev() {
            let summed = self.core(i).data().sum_axis(Axis(1));
            out[i] = summed.dot(&out[i + 1]);
        }
        out
    }
}

fn contract_mode(core: &Core, left: &Array1<f64>, right: &Array1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(core.phys_dim(), |k| left.dot(&core.slice(k).dot(right)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn marginal_of_product_tensor() {
        let tt = TensorTrain::rank_one(&[vec![1.0, 2.0], vec![3.0, 5.0, 7.0], vec![0.5, 0.25]])
            .unwrap();
        let m = tt.marginal(1).unwrap();
        assert_eq!(m, array![3.0 * 3.0 * 0.75, 5.0 * 3.0 * 0.75, 7.0 * 3.0 * 0.75]);
        assert!((tt.sum() - 3.0 * 15.0 * 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_core_arithmetic() {
        let a = TensorTrain::rank_one(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let b = TensorTrain::rank_one(&[vec![4.0, 5.0, 6.0]]).unwrap();
        let c = a.add(&b).unwrap();
        assert_eq!(c.eval(&[2]).unwrap(), 9.0);
        assert_eq!(a.hadamard(&b).unwrap().eval(&[1]).unwrap(), 10.0);
    }

    #[test]
    fn mode_multiply_rejects_bad_width() {
        let a = TensorTrain::ones(&[2, 3]).unwrap();
        assert!(a.mode_multiply(1, &Array2::zeros((2, 2))).is_err());
        assert!(a.mode_multiply(2, &Array2::zeros((2, 3))).is_err());
    }
}
