use ndarray::{s, Array2, Array3, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::{multi_indices, DenseTensor, DEFAULT_DENSE_BUDGET};
use crate::error::{Result, TtError};

/// One order-3 core of shape `(left_rank, phys_dim, right_rank)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    data: Array3<f64>,
}

impl Core {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (l, n, r) = data.dim();
        if l == 0 || n == 0 || r == 0 {
            return Err(TtError::Shape(format!("core with empty axis ({l}, {n}, {r})")));
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().to_owned()
        };
        Ok(Self { data })
    }

    /// Builds a core from its slices `G(0), ..., G(n-1)`, each `l x r`.
    pub fn from_slices(slices: &[Array2<f64>]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(TtError::Shape("core needs at least one slice".into()));
        };
        let (l, r) = first.dim();
        let mut data = Array3::zeros((l, slices.len(), r));
        for (k, m) in slices.iter().enumerate() {
            if m.dim() != (l, r) {
                return Err(TtError::Shape(format!(
                    "slice {k} has shape {:?}, expected ({l}, {r})",
                    m.dim()
                )));
            }
            data.slice_mut(s![.., k, ..]).assign(m);
        }
        Self::new(data)
    }

    pub fn left_rank(&self) -> usize {
        self.data.dim().0
    }

    pub fn phys_dim(&self) -> usize {
        self.data.dim().1
    }

    pub fn right_rank(&self) -> usize {
        self.data.dim().2
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array3<f64> {
        self.data
    }

    /// The `left_rank x right_rank` matrix `G(:, k, :)`.
    pub fn slice(&self, k: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![.., k, ..])
    }

    /// Reshape to `(left_rank * phys_dim) x right_rank`.
    pub fn left_unfolding(&self) -> Array2<f64> {
        let (l, n, r) = self.data.dim();
        self.data
            .view()
            .into_shape_with_order((l * n, r))
            .expect("standard layout")
            .to_owned()
    }

    /// Reshape to `left_rank x (phys_dim * right_rank)`.
    pub fn right_unfolding(&self) -> Array2<f64> {
        let (l, n, r) = self.data.dim();
        self.data
            .view()
            .into_shape_with_order((l, n * r))
            .expect("standard layout")
            .to_owned()
    }

    pub(crate) fn from_left_unfolding(m: Array2<f64>, l: usize, n: usize) -> Self {
        let r = m.ncols();
        let m = m.as_standard_layout().to_owned();
        Self {
            data: m.into_shape_with_order((l, n, r)).expect("consistent shape"),
        }
    }

    pub(crate) fn from_right_unfolding(m: Array2<f64>, n: usize, r: usize) -> Self {
        let l = m.nrows();
        let m = m.as_standard_layout().to_owned();
        Self {
            data: m.into_shape_with_order((l, n, r)).expect("consistent shape"),
        }
    }
}

/// A tensor in TT format.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<Core>,
}

impl TensorTrain {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return Err(TtError::Shape("a tensor train needs at least one core".into()));
        }
        if cores[0].left_rank() != 1 || cores[cores.len() - 1].right_rank() != 1 {
            return Err(TtError::Shape(format!(
                "boundary ranks must be 1, got {} and {}",
                cores[0].left_rank(),
                cores[cores.len() - 1].right_rank()
            )));
        }
        for (i, pair) in cores.windows(2).enumerate() {
            if pair[0].right_rank() != pair[1].left_rank() {
                return Err(TtError::Shape(format!(
                    "core {i} has right rank {} but core {} has left rank {}",
                    pair[0].right_rank(),
                    i + 1,
                    pair[1].left_rank()
                )));
            }
        }
        Ok(Self { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Core>) -> Self {
        debug_assert!(Self::new(cores.clone()).is_ok());
        Self { cores }
    }

    /// Rank-1 tensor `v_1 ⊗ v_2 ⊗ ... ⊗ v_N`.
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        let cores = vectors
            .iter()
            .map(|v| {
                Array3::from_shape_vec((1, v.len(), 1), v.clone())
                    .map_err(|e| TtError::Shape(e.to_string()))
                    .and_then(Core::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Rank-1 tensor with every entry equal to `value`.
    pub fn constant(dims: &[usize], value: f64) -> Result<Self> {
        let mut vectors: Vec<Vec<f64>> = dims.iter().map(|&n| vec![1.0; n]).collect();
        if let Some(first) = vectors.first_mut() {
            first.iter_mut().for_each(|x| *x = value);
        }
        Self::rank_one(&vectors)
    }

    pub fn ones(dims: &[usize]) -> Result<Self> {
        Self::constant(dims, 1.0)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::constant(dims, 0.0)
    }

    /// Tensor train with the given interior ranks and i.i.d. standard normal
    /// core entries. `ranks` holds the `N - 1` interior ranks.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        if dims.is_empty() || ranks.len() + 1 != dims.len() {
            return Err(TtError::Shape(format!(
                "{} interior ranks given for order {}",
                ranks.len(),
                dims.len()
            )));
        }
        let mut full = Vec::with_capacity(dims.len() + 1);
        full.push(1);
        full.extend_from_slice(ranks);
        full.push(1);
        let cores = dims
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let shape = (full[i], n, full[i + 1]);
                Core::new(Array3::from_shape_simple_fn(shape, || rng.sample(StandardNormal)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn core(&self, i: usize) -> &Core {
        &self.cores[i]
    }

    pub fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(Core::phys_dim).collect()
    }

    /// All `N + 1` ranks including the two boundary ones.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.cores.len() + 1);
        r.push(1);
        r.extend(self.cores.iter().map(Core::right_rank));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored floating point values.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.data().len()).sum()
    }

    pub(crate) fn check_index(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.order()
            || idx
                .iter()
                .zip(&self.cores)
                .any(|(&k, c)| k >= c.phys_dim())
        {
            return Err(TtError::IndexOutOfRange {
                index: idx.to_vec(),
                dims: self.dims(),
            });
        }
        Ok(())
    }

    /// `G_1(k_1) G_2(k_2) ... G_N(k_N)`.
    pub fn eval(&self, idx: &[usize]) -> Result<f64> {
        self.check_index(idx)?;
        Ok(self.eval_unchecked(idx))
    }

    pub(crate) fn eval_unchecked(&self, idx: &[usize]) -> f64 {
        let mut row = vec![1.0];
        let mut next = Vec::new();
        for (core, &k) in self.cores.iter().zip(idx) {
            let g = core.slice(k);
            next.clear();
            next.resize(g.ncols(), 0.0);
            for (a, &x) in row.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (b, y) in next.iter_mut().enumerate() {
                    *y += x * g[[a, b]];
                }
            }
            std::mem::swap(&mut row, &mut next);
        }
        row[0]
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.to_dense_with_budget(DEFAULT_DENSE_BUDGET)
    }

    pub fn to_dense_with_budget(&self, budget: usize) -> Result<DenseTensor> {
        let dims = self.dims();
        // Contract left to right, keeping a (prefix, rank) matrix.
        let requested = dims.iter().map(|&n| n as u128).product::<u128>();
        if requested > budget as u128 {
            return Err(TtError::Capacity { requested, budget });
        }
        let mut acc = Array2::<f64>::ones((1, 1));
        for core in &self.cores {
            let (_, n, r) = core.data().dim();
            let unf = core.right_unfolding();
            let prod = acc.dot(&unf);
            debug_assert_eq!(prod.ncols(), n * r);
            let rows = prod.nrows() * n;
            acc = prod
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((rows, r))
                .expect("row-major reshape");
        }
        DenseTensor::new(dims, acc.into_raw_vec_and_offset().0)
    }

    /// Every multi-index of the grid, evaluated one by one. Slow; used by
    /// tests to check `to_dense`.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let dims = self.dims();
        multi_indices(&dims)
            .collect::<Vec<_>>()
            .into_iter()
            .map(move |idx| {
                let v = self.eval_unchecked(&idx);
                (idx, v)
            })
    }
}
