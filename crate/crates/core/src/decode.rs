//! Adaptive-rank tensor-train decoding with a Neyman-Pearson early stop.

use tensor_train::cross::{CrossConfig, CrossVariant};

use crate::code::{euclidean_distance, CodeLogApp, LinearCode};
use crate::error::{InferError, Result};
use crate::posterior::{infer_marginals, InferenceSettings};
use crate::stats::{noncentral_chi2_quantile, normal_approx_pe};

/// Default divisor between the target block error rate and the allowed
/// probability of stopping early on a wrong codeword.
pub const DEFAULT_SAFETY: f64 = 100.0;

/// Threshold test `d(x̂, y) < η` accepting a candidate as correct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Normal-approximation block error target `P̃_e`.
    pub pe: f64,
    /// Noncentrality `8 d_min / N0` of the wrong-codeword hypothesis.
    pub lambda: f64,
    pub eta: f64,
    pub safety: f64,
}

impl StoppingRule {
    pub fn new(code: &LinearCode, n0: f64, safety: f64) -> Self {
        let pe = normal_approx_pe(code.n(), code.k(), n0);
        Self::with_target(code, n0, pe, safety)
    }

    pub fn with_target(code: &LinearCode, n0: f64, pe: f64, safety: f64) -> Self {
        let lambda = 8.0 * code.d_min() as f64 / n0;
        let eta = stopping_threshold(code.n(), code.d_min(), n0, pe, safety);
        Self {
            pe,
            lambda,
            eta,
            safety,
        }
    }
}

/// `η = (N0/2) F⁻¹_{χ²_n(λ)}(P̃_e / safety)` with `λ = 8 d_min / N0`.
pub fn stopping_threshold(n: usize, d_min: usize, n0: f64, pe: f64, safety: f64) -> f64 {
    let lambda = 8.0 * d_min as f64 / n0;
    n0 / 2.0 * noncentral_chi2_quantile(pe / safety, n as f64, lambda)
}

#[derive(Debug, Clone)]
pub struct DecodeSettings {
    /// Taylor-initialisation rank caps tried in order.
    pub schedule: Vec<usize>,
    pub cross: CrossConfig,
    pub taylor_p: usize,
    pub variant: CrossVariant,
    /// Rounding tolerance of the log-APP tensor train.
    pub tol: f64,
}

impl DecodeSettings {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule.windows(2).any(|w| w[0] >= w[1]) || self.schedule[0] == 0 {
            return Err(InferError::Config(format!(
                "rank schedule {:?} must be non-empty, positive and strictly increasing",
                self.schedule
            )));
        }
        self.cross.validate()?;
        Ok(())
    }
}

/// Random directions added to each cross step when decoding. At moderate
/// `E_b/N_0` the posterior of a code is nearly rank one, so the observed
/// ranks are mostly this padding plus one.
pub const DECODE_OVERSAMPLE: usize = 13;

/// Default schedule: `10, 20, 30` for long codes, a single step of 10
/// otherwise.
pub fn default_schedule(code: &LinearCode) -> Vec<usize> {
    if code.k() >= 30 {
        vec![10, 20, 30]
    } else {
        vec![10]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub u: Vec<u8>,
    /// Best squared distance `ν*`; infinite if every step failed.
    pub nu: f64,
    /// Largest bond rank after exponentiation over the executed steps.
    pub max_rank: usize,
    /// Schedule steps executed.
    pub steps: usize,
    pub early_stop: bool,
    /// Steps whose inference failed.
    pub failures: usize,
    /// `ν*` after each executed step.
    pub nu_trace: Vec<f64>,
}

/// Tensor-train bit-wise MAP decoding with an increasing rank schedule.
///
/// Each step exponentiates the log-APP with the next Taylor rank cap,
/// takes hard bit decisions and re-encodes them. The best candidate is
/// kept, and the loop stops as soon as its distance to `y` falls below
/// `rule.eta`.
pub fn ttdec(
    y: &[f64],
    app: &CodeLogApp,
    n0: f64,
    rule: &StoppingRule,
    settings: &DecodeSettings,
) -> Result<DecodeOutcome> {
    settings.validate()?;
    let code = app.code();
    let lp = app.build(y, n0, settings.tol)?;
    let mut best = DecodeOutcome {
        u: vec![0; code.k()],
        nu: f64::INFINITY,
        max_rank: 0,
        steps: 0,
        early_stop: false,
        failures: 0,
        nu_trace: Vec::with_capacity(settings.schedule.len()),
    };
    for (step, &rmax) in settings.schedule.iter().enumerate() {
        let mut cross = settings.cross.clone();
        cross.rng_seed = cross.rng_seed.wrapping_add(step as u64);
        let inference = InferenceSettings {
            cross,
            taylor_p: settings.taylor_p,
            taylor_max_rank: rmax,
            variant: settings.variant,
        };
        best.steps += 1;
        match infer_marginals(&lp, &inference) {
            Ok((marginals, rank)) => {
                best.max_rank = best.max_rank.max(rank);
                let u: Vec<u8> = marginals.argmax().into_iter().map(|b| b as u8).collect();
                let nu = euclidean_distance(&code.encode(&u), y);
                if nu < best.nu {
                    best.nu = nu;
                    best.u = u;
                }
            }
            Err(InferError::InferenceFailure { .. }) | Err(InferError::Tt(_)) => best.failures += 1,
            Err(e) => return Err(e),
        }
        best.nu_trace.push(best.nu);
        if best.nu < rule.eta {
            best.early_stop = true;
            break;
        }
    }
    Ok(best)
}
