//! Marginal inference over discrete unknowns with tensor trains.
//!
//! The unnormalised log-posterior `Λ(x)` of a detection problem is built
//! exactly in tensor-train format, exponentiated by cross approximation
//! and marginalised mode by mode:
//!
//! - [`posterior`]: priors, likelihood sums, exponentiation, marginals and
//!   hard decisions for any model,
//! - [`mimo`]: Rayleigh MIMO channels with QAM and the detector `ttdet`,
//! - [`code`] and [`decode`]: binary linear codes over the BI-AWGN channel
//!   and the adaptive-rank decoder `ttdec`,
//! - [`stats`]: noncentral chi-squared and finite-blocklength helpers,
//! - [`oracle`]: exhaustive marginals for small problems,
//! - [`sim`]: Monte Carlo error-rate sweeps and CSV output,
//! - [`config`]: run options shared by the command line and TOML files.

pub mod code;
pub mod config;
pub mod decode;
mod error;
pub mod mimo;
pub mod oracle;
pub mod posterior;
pub mod sim;
pub mod stats;

pub use error::{InferError, Result};
