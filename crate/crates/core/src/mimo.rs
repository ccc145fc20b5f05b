//! Rayleigh-fading MIMO channel with square QAM, its real-valued model and
//! the tensor-train detector.

use ndarray::{concatenate, s, Array1, Array2, Array3, Axis};
use ndarray_linalg::Solve;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use tensor_train::{Core, TensorTrain, UNBOUNDED_RANK};

use crate::error::{InferError, Result};
use crate::posterior::{infer_marginals_from, sum_loglikelihood_tts, InferenceSettings, LogPosterior, MarginalTable};

/// Square `M`-QAM, factorised into the real alphabet `{±1, ±3, ...}` of
/// size `L = √M` applied to the in-phase and quadrature parts.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    pub m: usize,
    /// Ascending real alphabet.
    pub alphabet: Vec<f64>,
}

impl QamConstellation {
    pub fn new(m: usize) -> Result<Self> {
        let l = (m as f64).sqrt().round() as usize;
        if l < 2 || l * l != m || l % 2 != 0 {
            return Err(InferError::Config(format!("{m}-QAM is not a square even constellation")));
        }
        let alphabet = (0..l).map(|k| (2 * k) as f64 - (l - 1) as f64).collect();
        Ok(Self { m, alphabet })
    }

    pub fn l(&self) -> usize {
        self.alphabet.len()
    }

    /// Mean energy of a complex symbol, `2(M - 1)/3`.
    pub fn mean_energy(&self) -> f64 {
        2.0 * (self.m as f64 - 1.0) / 3.0
    }

    /// Mean energy of one real component, `(M - 1)/3`.
    pub fn component_energy(&self) -> f64 {
        self.mean_energy() / 2.0
    }

    /// Index of the alphabet entry closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let l = self.l() as f64;
        let k = ((x + l - 1.0) / 2.0).round();
        k.clamp(0.0, l - 1.0) as usize
    }
}

/// Real-valued channel `y = Hx + n`, `n ~ N(0, σ² I)`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `N_R x N_T`.
    pub h: Array2<f64>,
    pub sigma2: f64,
}

impl ChannelRealization {
    pub fn nt(&self) -> usize {
        self.h.ncols()
    }

    pub fn nr(&self) -> usize {
        self.h.nrows()
    }
}

/// How the noise power is set from the target SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrMode {
    /// σ² from the expected signal power of the channel.
    #[default]
    Expected,
    /// Noise rescaled per transmission so that the realised ratio
    /// `‖H̃x̃‖² / ‖ñ‖²` hits the target exactly.
    Realized,
}

/// `Ñ_R x Ñ_T` matrix of i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(nt: usize, nr: usize, rng: &mut R) -> Array2<Complex64> {
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    Array2::from_shape_simple_fn((nr, nt), || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    })
}

/// `[[Re, -Im], [Im, Re]]`.
pub fn realify_matrix(h: &Array2<Complex64>) -> Array2<f64> {
    let re = h.mapv(|z| z.re);
    let im = h.mapv(|z| z.im);
    let top = concatenate![Axis(1), re, -&im];
    let bottom = concatenate![Axis(1), im, re];
    concatenate![Axis(0), top, bottom]
}

/// `(Re; Im)`.
pub fn realify_vector(x: &Array1<Complex64>) -> Array1<f64> {
    concatenate![Axis(0), x.mapv(|z| z.re), x.mapv(|z| z.im)]
}

pub fn complexify_vector(x: &Array1<f64>) -> Result<Array1<Complex64>> {
    if x.len() % 2 != 0 {
        return Err(InferError::Shape(format!("real vector of odd length {}", x.len())));
    }
    let n = x.len() / 2;
    Ok(Array1::from_shape_fn(n, |i| Complex64::new(x[i], x[n + i])))
}

pub fn complexify_matrix(h: &Array2<f64>) -> Result<Array2<Complex64>> {
    let (r, c) = h.dim();
    if r % 2 != 0 || c % 2 != 0 {
        return Err(InferError::Shape(format!("real matrix {r} x {c} is not a block model")));
    }
    let (nr, nt) = (r / 2, c / 2);
    let re = h.slice(s![..nr, ..nt]);
    let im = h.slice(s![nr.., ..nt]);
    Ok(Array2::from_shape_fn((nr, nt), |(i, j)| Complex64::new(re[[i, j]], im[[i, j]])))
}

/// Real model of a complex transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct RealModel {
    pub h: Array2<f64>,
    pub x: Array1<f64>,
    pub y: Array1<f64>,
    pub n: Array1<f64>,
}

pub fn realify(
    h: &Array2<Complex64>,
    x: &Array1<Complex64>,
    y: &Array1<Complex64>,
    n: &Array1<Complex64>,
) -> Result<RealModel> {
    let (nr, nt) = h.dim();
    if x.len() != nt || y.len() != nr || n.len() != nr {
        return Err(InferError::Shape(format!(
            "channel {nr} x {nt} with x {}, y {}, n {}",
            x.len(),
            y.len(),
            n.len()
        )));
    }
    Ok(RealModel {
        h: realify_matrix(h),
        x: realify_vector(x),
        y: realify_vector(y),
        n: realify_vector(n),
    })
}

/// Per-component noise variance `σ² = ‖H̃‖²_F Ē / (2 Ñ_R 10^{snr/10})`,
/// so that `E‖H̃x̃‖² / E‖ñ‖²` equals the target SNR.
pub fn noise_variance_for_snr(h: &Array2<Complex64>, mean_energy: f64, snr_db: f64) -> Result<f64> {
    let fro2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    if !(fro2 > 0.0) || !snr_db.is_finite() {
        return Err(InferError::DegenerateChannel(format!(
            "‖H‖² = {fro2}, SNR {snr_db} dB"
        )));
    }
    Ok(fro2 * mean_energy / (2.0 * h.nrows() as f64 * 10f64.powf(snr_db / 10.0)))
}

/// `hᵀx` as a rank-3 tensor train over `x_i ∈ alphabet`.
pub fn build_hx_tt(h: &[f64], alphabet: &[f64]) -> Result<TensorTrain> {
    let n = h.len();
    let l = alphabet.len();
    if n == 0 || l == 0 {
        return Err(InferError::Shape("empty coefficient vector or alphabet".into()));
    }
    if n == 1 {
        return Ok(TensorTrain::rank_one(&[alphabet.iter().map(|a| h[0] * a).collect()])?);
    }
    // Slice k is A + a_k B with the 3-state accumulator (1, partial sum, _).
    let first = Array3::from_shape_fn((1, l, 3), |(_, k, b)| match b {
        0 => 1.0,
        1 => h[0] * alphabet[k],
        _ => 0.0,
    });
    let mut cores = vec![Core::new(first)?];
    for &c in &h[1..n - 1] {
        let g = Array3::from_shape_fn((3, l, 3), |(a, k, b)| {
            let t = c * alphabet[k];
            match (a, b) {
                (0, 0) | (1, 1) => 1.0,
                (2, 2) => 1.0 + t,
                (0, 1) | (1, 2) => t,
                _ => 0.0,
            }
        });
        cores.push(Core::new(g)?);
    }
    let last = Array3::from_shape_fn((3, l, 1), |(a, k, _)| match a {
        0 => h[n - 1] * alphabet[k],
        1 => 1.0,
        _ => 0.0,
    });
    cores.push(Core::new(last)?);
    Ok(TensorTrain::new(cores)?)
}

/// `-(y_j - h_jᵀx)² / (2σ²)` before any rounding (bond ranks up to 16).
pub fn build_loglik_term_exact(y: f64, h: &[f64], sigma2: f64, alphabet: &[f64]) -> Result<TensorTrain> {
    if !(sigma2 > 0.0) {
        return Err(InferError::Config(format!("noise variance {sigma2} must be positive")));
    }
    let hx = build_hx_tt(h, alphabet)?;
    let d = TensorTrain::constant(&hx.dims(), y)?.add(&hx.scale(-1.0))?;
    Ok(d.hadamard(&d)?.scale(-0.5 / sigma2))
}

/// [`build_loglik_term_exact`] rounded with relative tolerance `tol`.
pub fn build_loglik_term(y: f64, h: &[f64], sigma2: f64, alphabet: &[f64], tol: f64) -> Result<TensorTrain> {
    Ok(build_loglik_term_exact(y, h, sigma2, alphabet)?.truncate(tol, UNBOUNDED_RANK)?)
}

/// `Λ(x) = Σ_j ℓ(y_j | x)` for a uniform prior.
pub fn build_log_posterior(y: &Array1<f64>, ch: &ChannelRealization, alphabet: &[f64], tol: f64) -> Result<LogPosterior> {
    if y.len() != ch.nr() {
        return Err(InferError::Shape(format!(
            "observation of length {} for {} receive components",
            y.len(),
            ch.nr()
        )));
    }
    let terms = ch
        .h
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yj)| build_loglik_term(yj, &row.to_vec(), ch.sigma2, alphabet, tol))
        .collect::<Result<Vec<_>>>()?;
    LogPosterior::new(sum_loglikelihood_tts(&terms, tol)?, alphabet.to_vec())
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub marginals: MarginalTable,
    /// Alphabet index per transmit component.
    pub decisions: Vec<usize>,
    /// Largest bond rank after exponentiation.
    pub max_rank: usize,
}

/// Tensor-train symbol-wise MAP detector. The LMMSE decision is one of
/// the starting points of the mode estimate.
pub fn ttdet(
    y: &Array1<f64>,
    ch: &ChannelRealization,
    alphabet: &[f64],
    tol: f64,
    settings: &InferenceSettings,
) -> Result<Detection> {
    let lp = build_log_posterior(y, ch, alphabet, tol)?;
    let energy = alphabet.iter().map(|a| a * a).sum::<f64>() / alphabet.len() as f64;
    let start: Vec<usize> = lmmse_estimate(y, ch, energy)?
        .iter()
        .map(|&v| nearest_index(alphabet, v))
        .collect();
    let (marginals, max_rank) = infer_marginals_from(&lp, settings, &[start])?;
    let decisions = marginals.argmax();
    Ok(Detection {
        marginals,
        decisions,
        max_rank,
    })
}

fn nearest_index(alphabet: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (k, a) in alphabet.iter().enumerate() {
        if (a - v).abs() < (alphabet[best] - v).abs() {
            best = k;
        }
    }
    best
}

/// `(HᵀH + σ²/E_s I)⁻¹ Hᵀy` for i.i.d. components of energy `E_s`.
pub fn lmmse_estimate(y: &Array1<f64>, ch: &ChannelRealization, component_energy: f64) -> Result<Array1<f64>> {
    let ht = ch.h.t();
    let mut gram = ht.dot(&ch.h);
    let reg = ch.sigma2 / component_energy;
    gram.diag_mut().mapv_inplace(|d| d + reg);
    let rhs = ht.dot(y);
    match gram.solve(&rhs) {
        Ok(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => {
            gram.diag_mut().mapv_inplace(|d| d + 1e-12);
            gram.solve(&rhs)
                .map_err(|e| InferError::DegenerateChannel(e.to_string()))
        }
    }
}

/// Linear MMSE estimate followed by a per-component nearest-symbol
/// decision. Returns alphabet indices.
pub fn lmmse_detect(y: &Array1<f64>, ch: &ChannelRealization, qam: &QamConstellation) -> Result<Vec<usize>> {
    let est = lmmse_estimate(y, ch, qam.component_energy())?;
    Ok(est.iter().map(|&v| qam.nearest(v)).collect())
}

/// One random transmission over a fresh channel.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub channel: ChannelRealization,
    /// Alphabet index per real transmit component.
    pub x_idx: Vec<usize>,
    pub x: Array1<f64>,
    pub y: Array1<f64>,
}

pub fn sample_transmission<R: Rng + ?Sized>(
    nt: usize,
    nr: usize,
    qam: &QamConstellation,
    snr_db: f64,
    mode: SnrMode,
    rng: &mut R,
) -> Result<Transmission> {
    let hc = sample_channel(nt, nr, rng);
    let h = realify_matrix(&hc);
    let x_idx: Vec<usize> = (0..2 * nt).map(|_| rng.random_range(0..qam.l())).collect();
    let x = Array1::from_iter(x_idx.iter().map(|&k| qam.alphabet[k]));
    let mut sigma2 = noise_variance_for_snr(&hc, qam.mean_energy(), snr_db)?;
    let z: Array1<f64> = Array1::from_shape_simple_fn(2 * nr, || rng.sample(StandardNormal));
    let hx = h.dot(&x);
    let noise = match mode {
        SnrMode::Expected => z * sigma2.sqrt(),
        SnrMode::Realized => {
            let target = hx.dot(&hx) / 10f64.powf(snr_db / 10.0);
            sigma2 = target / (2 * nr) as f64;
            let zz = z.dot(&z);
            z * (target / zz).sqrt()
        }
    };
    let y = hx + noise;
    Ok(Transmission {
        channel: ChannelRealization { h, sigma2 },
        x_idx,
        x,
        y,
    })
}
