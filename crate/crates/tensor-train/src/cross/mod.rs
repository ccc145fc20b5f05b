//! Cross approximation: apply a scalar function elementwise to a tensor
//! train from a small number of sampled entries.
//!
//! Both variants keep nested pivot sets of prefixes `I_i` and suffixes
//! `J_i` for every bond and only evaluate `f(a)` on the fibers
//! `I_i × [n_i] × J_{i+1}`. Entries of `a` on those fibers come from cached
//! interface matrices, so a fiber costs a couple of small matrix products.
//!
//! - [`CrossVariant::Sample`] updates one core at a time: the fiber matrix
//!   is compressed by a truncated SVD, padded with random directions and a
//!   new pivot set is chosen by `maxvol`.
//! - [`CrossVariant::Sweep`] works on the merged two-core supercore, so the
//!   bond rank can adapt by more than the random padding per pass.

mod engine;
mod matrix;

use rand::Rng;

use crate::error::{Result, TtError};
use crate::tensor::TensorTrain;

pub use matrix::{matrix_cross, MatrixCross};

/// Settings shared by both cross variants.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    /// Hard cap on every bond rank.
    pub max_rank: usize,
    /// Number of directional passes (left-to-right or right-to-left).
    pub n_sweeps: usize,
    /// Random directions appended to each local basis.
    pub sample_oversample: usize,
    /// Stop once the relative change on the probe set drops below this.
    pub conv_tol: f64,
    /// Relative tolerance of the local SVD truncation.
    pub trunc_tol: f64,
    pub rng_seed: u64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            max_rank: 64,
            n_sweeps: 8,
            sample_oversample: 4,
            conv_tol: 1e-6,
            trunc_tol: 1e-10,
            rng_seed: 0,
        }
    }
}

impl CrossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rank == 0 {
            return Err(TtError::Config("max_rank must be at least 1".into()));
        }
        if self.n_sweeps == 0 {
            return Err(TtError::Config("n_sweeps must be at least 1".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(TtError::Config("conv_tol must be positive".into()));
        }
        if !(self.trunc_tol >= 0.0) {
            return Err(TtError::Config("trunc_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossVariant {
    Sample,
    Sweep,
}

impl std::str::FromStr for CrossVariant {
    type Err = TtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Self::Sample),
            "sweep" => Ok(Self::Sweep),
            other => Err(TtError::Config(format!("unknown cross variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for CrossVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sample => "sample",
            Self::Sweep => "sweep",
        })
    }
}

/// Pivot sets after the last pass. `left[i]` holds the prefixes (length
/// `i + 1`) and `right[i]` the suffixes (length `N - i - 1`) at the bond
/// between cores `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PivotSets {
    pub left: Vec<Vec<Vec<usize>>>,
    pub right: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone)]
pub struct CrossOutput {
    pub tt: TensorTrain,
    pub pivots: PivotSets,
    /// Passes actually run.
    pub sweeps: usize,
    pub converged: bool,
    /// Function evaluations, counting repeats.
    pub n_evals: u64,
    /// Direction of the pass that produced `tt`.
    pub last_direction: Direction,
}

impl CrossOutput {
    /// Multi-indices at which `tt` interpolates `f(a)` exactly: the
    /// boundary fiber of the last pass, completed by the nested pivots.
    pub fn interpolation_points(&self) -> Vec<Vec<usize>> {
        let dims = self.tt.dims();
        let n = dims.len();
        if n == 1 {
            return (0..dims[0]).map(|k| vec![k]).collect();
        }
        let mut out = Vec::new();
        match self.last_direction {
            Direction::LeftToRight => {
                for prefix in &self.pivots.left[n - 2] {
                    for k in 0..dims[n - 1] {
                        let mut idx = prefix.clone();
                        idx.push(k);
                        out.push(idx);
                    }
                }
            }
            Direction::RightToLeft => {
                for k in 0..dims[0] {
                    for suffix in &self.pivots.right[0] {
                        let mut idx = vec![k];
                        idx.extend_from_slice(suffix);
                        out.push(idx);
                    }
                }
            }
        }
        out
    }
}

/// Approximates `f` applied elementwise to `a`, starting from the pivots
/// suggested by `init`, which should already be a rough approximation of
/// `f(a)`.
pub fn cross<F>(
    f: F,
    a: &TensorTrain,
    init: &TensorTrain,
    cfg: &CrossConfig,
    variant: CrossVariant,
) -> Result<CrossOutput>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if a.dims() != init.dims() {
        return Err(TtError::Shape(format!(
            "initial guess has dimensions {:?}, tensor has {:?}",
            init.dims(),
            a.dims()
        )));
    }
    engine::Engine::new(f, a, cfg, variant).run(init)
}

/// One-site cross with randomised basis enrichment.
pub fn cross_sample<F: Fn(f64) -> f64>(
    f: F,
    a: &TensorTrain,
    init: &TensorTrain,
    cfg: &CrossConfig,
) -> Result<CrossOutput> {
    cross(f, a, init, cfg, CrossVariant::Sample)
}

/// Two-site (supercore) cross with randomised basis enrichment.
pub fn cross_sweep<F: Fn(f64) -> f64>(
    f: F,
    a: &TensorTrain,
    init: &TensorTrain,
    cfg: &CrossConfig,
) -> Result<CrossOutput> {
    cross(f, a, init, cfg, CrossVariant::Sweep)
}

pub(crate) fn random_index<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Vec<usize> {
    dims.iter().map(|&n| rng.random_range(0..n)).collect()
}
