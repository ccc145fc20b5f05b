//! Noncentral chi-squared distribution, Gauss-Hermite quadrature and the
//! finite-blocklength normal approximation for the BI-AWGN channel.

use std::sync::OnceLock;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// CDF of the noncentral chi-squared distribution with `k` degrees of
/// freedom and noncentrality `lambda`, as a Poisson mixture of central
/// chi-squared CDFs summed outward from the Poisson mode.
pub fn noncentral_chi2_cdf(x: f64, k: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return 1.0;
    }
    let h = lambda / 2.0;
    let central = |j: f64| gamma_lr(k / 2.0 + j, x / 2.0);
    if h == 0.0 {
        return central(0.0);
    }
    let log_pois = |j: f64| -h + j * h.ln() - ln_gamma(j + 1.0);
    let mode = h.floor();
    let mut total = 0.0;
    let mut weight = 0.0;
    let mut j = mode;
    loop {
        let w = log_pois(j).exp();
        total += w * central(j);
        weight += w;
        if w < 1e-14 * weight || j > mode + 1e4 {
            break;
        }
        j += 1.0;
    }
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let w = log_pois(j).exp();
        total += w * central(j);
        weight += w;
        if w < 1e-14 * weight {
            break;
        }
        j -= 1.0;
    }
    total.clamp(0.0, 1.0)
}

/// Inverse of [`noncentral_chi2_cdf`] by bisection to relative `1e-12`.
pub fn noncentral_chi2_quantile(q: f64, k: f64, lambda: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return f64::INFINITY;
    }
    let mut hi = (k + lambda).max(1.0);
    while noncentral_chi2_cdf(hi, k, lambda) < q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if noncentral_chi2_cdf(mid, k, lambda) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss-Hermite nodes and weights for `∫ e^{-x²} f(x) dx`, by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = Array2::<f64>::zeros((order, order));
    for i in 1..order {
        let b = (i as f64 / 2.0).sqrt();
        j[[i, i - 1]] = b;
        j[[i - 1, i]] = b;
    }
    let (nodes, vecs) = j.eigh(UPLO::Lower).expect("symmetric tridiagonal eigenproblem");
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let weights = (0..order).map(|i| sqrt_pi * vecs[[0, i]] * vecs[[0, i]]).collect();
    (nodes.to_vec(), weights)
}

pub const HERMITE_ORDER: usize = 64;

fn hermite64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_ORDER))
}

/// `E[f(Z)]` for `Z ~ N(0, 1)` with the 64-point rule.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = hermite64();
    let s: f64 = x
        .iter()
        .zip(w)
        .map(|(&xi, &wi)| wi * f(std::f64::consts::SQRT_2 * xi))
        .sum();
    s / std::f64::consts::PI.sqrt()
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Information density of BPSK over AWGN in bits, for `x = +1`
/// transmitted and noise sample `z`: `1 - log2(1 + exp(-2y/σ²))`.
pub fn biawgn_info_density(z: f64, n0: f64) -> f64 {
    let sigma2 = n0 / 2.0;
    let y = 1.0 + sigma2.sqrt() * z;
    1.0 - softplus(-2.0 * y / sigma2) / std::f64::consts::LN_2
}

/// Capacity `C` (bits per use) and dispersion `V` (bits²) of the BI-AWGN
/// channel with noise variance `N0/2`.
///
/// Integrated by the trapezoid rule on `|z| <= 12`: the density bends
/// sharply around `y = 0` at small `N0`, which a fixed Hermite rule misses.
pub fn biawgn_capacity_dispersion(n0: f64) -> (f64, f64) {
    const STEPS: usize = 8192;
    let h = 24.0 / STEPS as f64;
    let norm = h / (2.0 * std::f64::consts::PI).sqrt();
    let (mut c, mut m2) = (0.0, 0.0);
    for i in 0..=STEPS {
        let z = -12.0 + i as f64 * h;
        let w = if i == 0 || i == STEPS { 0.5 } else { 1.0 } * (-0.5 * z * z).exp() * norm;
        let i = biawgn_info_density(z, n0);
        c += w * i;
        m2 += w * i * i;
    }
    (c, (m2 - c * c).max(0.0))
}

/// Normal approximation of the smallest block error probability of an
/// `(n, k)` code: `Q((C - R + log2(n)/(2n)) / sqrt(V/n))`.
pub fn normal_approx_pe(n: usize, k: usize, n0: f64) -> f64 {
    let (c, v) = biawgn_capacity_dispersion(n0);
    let nf = n as f64;
    let rate = k as f64 / nf;
    let num = c - rate + nf.log2() / (2.0 * nf);
    if v <= 0.0 {
        return if num > 0.0 { 0.0 } else { 1.0 };
    }
    q_function(num / (v / nf).sqrt())
}

/// `N0` for a given `E_b/N0` in dB at rate `R`: `E_b/N0 = -10 log10(R N0)`.
pub fn n0_from_ebn0(ebn0_db: f64, rate: f64) -> f64 {
    10f64.powf(-ebn0_db / 10.0) / rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        // statrs' erfc is good to about 1e-11 relative here
        let q = q_function(1.959963984540054);
        assert!((q - 0.025).abs() < 1e-10, "{q}");
    }

    #[test]
    fn hermite_integrates_moments() {
        assert!((gaussian_expectation(|z| z * z) - 1.0).abs() < 1e-12);
        assert!((gaussian_expectation(|z| z.powi(4)) - 3.0).abs() < 1e-11);
        assert!(gaussian_expectation(|z| z.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn central_case_matches_known_quantile() {
        // chi2_2 has CDF 1 - exp(-x/2)
        let x = noncentral_chi2_quantile(0.5, 2.0, 0.0);
        assert!((x - 2.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn cdf_decreases_with_noncentrality() {
        let a = noncentral_chi2_cdf(10.0, 4.0, 1.0);
        let b = noncentral_chi2_cdf(10.0, 4.0, 5.0);
        assert!(a > b);
    }

    #[test]
    fn capacity_limits() {
        let (c, _) = biawgn_capacity_dispersion(1e-3);
        assert!((c - 1.0).abs() < 1e-9);
        let (c, _) = biawgn_capacity_dispersion(1e4);
        assert!(c < 1e-3);
    }
}
