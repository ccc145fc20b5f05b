//! Binary linear block codes and the tensor train of their log-APP over
//! the BI-AWGN channel.

use std::path::Path;

use ndarray::{Array1, Array3};
use tensor_train::{Core, TensorTrain, UNBOUNDED_RANK};

use crate::error::{InferError, Result};
use crate::oracle::marginals_of_log_table;
use crate::posterior::{LogPosterior, MarginalTable};

/// Largest dimension for which `d_min` is checked by enumeration.
pub const DMIN_ENUMERATION_LIMIT: usize = 20;

/// Binary `(n, k)` code with generator `G ∈ F_2^{n x k}`, `c = G u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    /// Row `j` of `G` as a bit mask over the information bits.
    rows: Vec<u64>,
    d_min: usize,
    d_min_verified: bool,
}

impl LinearCode {
    /// `d_min = None` computes the distance by enumeration (`k ≤ 20`).
    pub fn new(rows: Vec<Vec<u8>>, d_min: Option<usize>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 || k > 64 || n > 128 {
            return Err(InferError::Code(format!("unsupported dimensions n = {n}, k = {k}")));
        }
        let mut masks = Vec::with_capacity(n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(InferError::Code(format!("row {j} has {} bits, expected {k}", row.len())));
            }
            let mut m = 0u64;
            for (i, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m |= 1 << i,
                    _ => return Err(InferError::Code(format!("row {j} holds non-binary entry {b}"))),
                }
            }
            masks.push(m);
        }
        if gf2_rank(&masks) < k {
            return Err(InferError::Code("generator matrix is rank deficient".into()));
        }
        let mut code = Self {
            n,
            k,
            rows: masks,
            d_min: 0,
            d_min_verified: false,
        };
        if k <= DMIN_ENUMERATION_LIMIT {
            let d = code.enumerate_min_distance();
            if let Some(claimed) = d_min {
                if claimed != d {
                    return Err(InferError::Code(format!(
                        "declared d_min {claimed} but enumeration gives {d}"
                    )));
                }
            }
            code.d_min = d;
            code.d_min_verified = true;
        } else {
            code.d_min = d_min.ok_or_else(|| {
                InferError::Code(format!("k = {k} is too large to enumerate; d_min must be given"))
            })?;
        }
        Ok(code)
    }

    /// Parses `n k d_min` followed by `n` rows of `k` bits.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(InferError::Parse {
            line: 1,
            msg: "empty code file".into(),
        })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| InferError::Parse {
                line,
                msg: format!("header: {e}"),
            })?;
        let [n, k, d] = nums[..] else {
            return Err(InferError::Parse {
                line,
                msg: "header must be `n k d_min`".into(),
            });
        };
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, text) = lines.next().ok_or(InferError::Parse {
                line: line + rows.len() + 1,
                msg: format!("expected {n} generator rows, found {}", rows.len()),
            })?;
            let row: Vec<u8> = text
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(InferError::Parse {
                        line,
                        msg: format!("`{other}` is not a bit"),
                    }),
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(InferError::Parse {
                    line,
                    msg: format!("row has {} bits, expected {k}", row.len()),
                });
            }
            rows.push(row);
        }
        if let Some((line, _)) = lines.next() {
            return Err(InferError::Parse {
                line,
                msg: "trailing content after the generator rows".into(),
            });
        }
        Self::new(rows, Some(d))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    /// Whether `d_min` was confirmed by enumeration rather than read.
    pub fn d_min_verified(&self) -> bool {
        self.d_min_verified
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// `G[j][i]`.
    pub fn bit(&self, j: usize, i: usize) -> bool {
        self.rows[j] >> i & 1 == 1
    }

    /// Codeword bits for the information word whose bit `i` is `u >> i & 1`.
    pub fn encode_mask(&self, u: u64) -> Vec<u8> {
        self.rows.iter().map(|&r| ((r & u).count_ones() & 1) as u8).collect()
    }

    pub fn encode(&self, u: &[u8]) -> Vec<u8> {
        self.encode_mask(to_mask(u))
    }

    fn enumerate_min_distance(&self) -> usize {
        (1u64..1 << self.k)
            .map(|u| self.rows.iter().filter(|&&r| (r & u).count_ones() & 1 == 1).count())
            .min()
            .expect("k >= 1")
    }
}

pub fn load_code(path: impl AsRef<Path>) -> Result<LinearCode> {
    LinearCode::parse(&std::fs::read_to_string(path)?)
}

fn to_mask(u: &[u8]) -> u64 {
    u.iter()
        .enumerate()
        .fold(0u64, |m, (i, &b)| m | (u64::from(b & 1) << i))
}

fn gf2_rank(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// BPSK image `(-1)^c`.
pub fn bpsk(c: &[u8]) -> Array1<f64> {
    c.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Log-APP tensor train of a code with the observation-independent cores
/// `G_2, ..., G_k` built once.
///
/// Mode `i` is information bit `u_i`, index 0 meaning `u_i = 0`. The entry
/// at `u` is `Σ_j (2 y_j / N_0) ∏_{i: G_ji = 1} (-1)^{u_i}`.
#[derive(Debug, Clone)]
pub struct CodeLogApp {
    code: LinearCode,
    tail: Vec<Core>,
}

impl CodeLogApp {
    pub fn new(code: LinearCode) -> Result<Self> {
        let (n, k) = (code.n, code.k);
        let sign = |j: usize, i: usize, b: usize| if b == 1 && code.bit(j, i) { -1.0 } else { 1.0 };
        let mut tail = Vec::with_capacity(k.saturating_sub(1));
        for i in 1..k {
            let core = if i + 1 < k {
                Array3::from_shape_fn((n, 2, n), |(a, b, c)| if a == c { sign(a, i, b) } else { 0.0 })
            } else {
                Array3::from_shape_fn((n, 2, 1), |(a, b, _)| sign(a, i, b))
            };
            tail.push(Core::new(core)?);
        }
        Ok(Self { code, tail })
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    /// The exact log-APP tensor train (bond ranks `n`).
    pub fn build_exact(&self, y: &[f64], n0: f64) -> Result<TensorTrain> {
        let (n, k) = (self.code.n, self.code.k);
        if y.len() != n {
            return Err(InferError::Shape(format!("observation of length {}, code length {n}", y.len())));
        }
        if !(n0 > 0.0) {
            return Err(InferError::Config(format!("N0 = {n0} must be positive")));
        }
        let sign = |j: usize, b: usize| if b == 1 && self.code.bit(j, 0) { -1.0 } else { 1.0 };
        let scale = 2.0 / n0;
        if k == 1 {
            let v: Vec<f64> = (0..2)
                .map(|b| (0..n).map(|j| scale * y[j] * sign(j, b)).sum())
                .collect();
            return Ok(TensorTrain::rank_one(&[v])?);
        }
        let first = Array3::from_shape_fn((1, 2, n), |(_, b, j)| scale * y[j] * sign(j, b));
        let mut cores = Vec::with_capacity(k);
        cores.push(Core::new(first)?);
        cores.extend(self.tail.iter().cloned());
        Ok(TensorTrain::new(cores)?)
    }

    /// [`Self::build_exact`] rounded with relative tolerance `tol`.
    pub fn build(&self, y: &[f64], n0: f64, tol: f64) -> Result<LogPosterior> {
        let tt = self.build_exact(y, n0)?.truncate(tol, UNBOUNDED_RANK)?;
        LogPosterior::new(tt, vec![0.0, 1.0])
    }
}

/// Log-APP tensor train of `code` for observation `y`.
pub fn build_code_logapp_tt(code: &LinearCode, y: &[f64], n0: f64, tol: f64) -> Result<TensorTrain> {
    Ok(CodeLogApp::new(code.clone())?.build(y, n0, tol)?.tt)
}

/// `Λ(u)` up to the constant, evaluated directly.
pub fn logapp_direct(code: &LinearCode, y: &[f64], n0: f64, u: &[u8]) -> f64 {
    let c = code.encode(u);
    y.iter()
        .zip(&c)
        .map(|(&yj, &cj)| if cj == 0 { 2.0 * yj / n0 } else { -2.0 * yj / n0 })
        .sum()
}

/// Exact bit-wise posterior marginals by enumerating all `2^k` codewords.
pub fn bitwise_map_oracle(code: &LinearCode, y: &[f64], n0: f64) -> Result<MarginalTable> {
    let k = code.k;
    if k > DMIN_ENUMERATION_LIMIT {
        return Err(InferError::Capacity {
            requested: 1u128 << k,
            limit: 1 << DMIN_ENUMERATION_LIMIT,
        });
    }
    // Row-major order over (u_0, ..., u_{k-1}): u_0 is the slowest index.
    let values: Vec<f64> = (0u64..1 << k)
        .map(|m| {
            let u = (0..k).fold(0u64, |acc, i| acc | ((m >> (k - 1 - i)) & 1) << i);
            code.encode_mask(u)
                .iter()
                .zip(y)
                .map(|(&c, &yj)| if c == 0 { yj } else { -yj })
                .sum::<f64>()
                * (2.0 / n0)
        })
        .collect();
    Ok(marginals_of_log_table(&values, &vec![2; k]))
}

/// Squared Euclidean distance between `y` and the BPSK image of `c`.
pub fn euclidean_distance(c: &[u8], y: &[f64]) -> f64 {
    c.iter()
        .zip(y)
        .map(|(&b, &yj)| {
            let x = if b == 0 { 1.0 } else { -1.0 };
            (yj - x) * (yj - x)
        })
        .sum()
}
