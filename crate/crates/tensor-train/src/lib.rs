//! Tensor trains: exact arithmetic, SVD rounding and cross approximation.
//!
//! A tensor `A` of order `N` is stored as a chain of order-3 cores
//! `G_i` of shape `(r_{i-1}, n_i, r_i)` with `r_0 = r_N = 1`, so that
//!
//! ```text
//! A(k_1, ..., k_N) = G_1(k_1) G_2(k_2) ... G_N(k_N)
//! ```
//!
//! where `G_i(k)` is the `r_{i-1} x r_i` slice of core `i`. All indices in
//! this crate are zero-based.
//!
//! The crate provides
//! - construction and evaluation ([`TensorTrain`], [`Core`]),
//! - a dense counterpart for small oracles ([`DenseTensor`]),
//! - addition, Hadamard product, scaling, mode products and marginals,
//! - QR orthogonalisation and SVD rounding ([`TensorTrain::truncate`]),
//! - the `maxvol` row selector, matrix cross and two tensor cross
//!   algorithms applying an elementwise function to a tensor train
//!   ([`cross`]), and a Taylor-series exponential ([`exp_taylor`]).

mod dense;
mod error;
mod linalg;
mod ops;
mod round;
mod taylor;
mod tensor;

pub mod cross;
pub mod dump;
pub mod maxvol;

pub use dense::{multi_indices, DenseTensor, DEFAULT_DENSE_BUDGET};
pub use error::{Result, TtError};
pub use taylor::exp_taylor;
pub use tensor::{Core, TensorTrain};

/// Rank cap meaning "no cap".
pub const UNBOUNDED_RANK: usize = usize::MAX;
