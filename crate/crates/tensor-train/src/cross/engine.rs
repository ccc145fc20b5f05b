use ndarray::{concatenate, s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{random_index, CrossConfig, CrossOutput, CrossVariant, Direction, PivotSets};
use crate::error::{Result, TtError};
use crate::linalg::{chop, qr, right_solve, svd};
use crate::maxvol::maxvol;
use crate::tensor::{Core, TensorTrain};

const PROBES: usize = 256;

struct NonFinite {
    r: usize,
    c: usize,
    value: f64,
}

impl NonFinite {
    fn at(self, index: impl FnOnce(usize, usize) -> Vec<usize>) -> TtError {
        TtError::NonFinite {
            index: index(self.r, self.c),
            value: self.value,
        }
    }
}

fn reshape(m: Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    m.as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, cols))
        .expect("element count preserved")
}

// Bond `i` sits in front of core `i`, so `left[i]` holds prefixes of length
// `i` and `right[i]` suffixes starting at core `i`. `pl[i]` stores the
// partial products of `a` for the prefixes in `left[i]` (|I_i| x ra_i) and
// `pr[i]` those for the suffixes in `right[i]` (ra_i x |J_i|).
pub(super) struct Engine<'a, F> {
    f: F,
    a: &'a TensorTrain,
    cfg: &'a CrossConfig,
    variant: CrossVariant,
    rng: ChaCha8Rng,
    dims: Vec<usize>,
    left: Vec<Vec<Vec<usize>>>,
    right: Vec<Vec<Vec<usize>>>,
    pl: Vec<Array2<f64>>,
    pr: Vec<Array2<f64>>,
    // Largest useful rank of each bond: min(prod n_<i, prod n_>=i).
    caps: Vec<usize>,
    n_evals: u64,
}

impl<'a, F: Fn(f64) -> f64> Engine<'a, F> {
    pub(super) fn new(f: F, a: &'a TensorTrain, cfg: &'a CrossConfig, variant: CrossVariant) -> Self {
        let n = a.order();
        let mut left = vec![Vec::new(); n + 1];
        let mut right = vec![Vec::new(); n + 1];
        left[0] = vec![Vec::new()];
        right[n] = vec![Vec::new()];
        let mut pl = vec![Array2::zeros((0, 0)); n + 1];
        let mut pr = vec![Array2::zeros((0, 0)); n + 1];
        pl[0] = Array2::ones((1, 1));
        pr[n] = Array2::ones((1, 1));
        let dims = a.dims();
        let caps = (0..=n)
            .map(|b| {
                let left = dims[..b].iter().fold(1usize, |p, &d| p.saturating_mul(d));
                let right = dims[b..].iter().fold(1usize, |p, &d| p.saturating_mul(d));
                left.min(right)
            })
            .collect();
        Self {
            f,
            a,
            cfg,
            variant,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            dims,
            left,
            right,
            pl,
            pr,
            caps,
            n_evals: 0,
        }
    }

    pub(super) fn run(mut self, init: &TensorTrain) -> Result<CrossOutput> {
        let n = self.dims.len();
        if n == 1 {
            let vals = self.a.core(0).left_unfolding().t().to_owned();
            let m = self.apply(vals).map_err(|e| e.at(|_, c| vec![c]))?;
            let tt = TensorTrain::new(vec![Core::from_right_unfolding(m, self.dims[0], 1)])?;
            return Ok(CrossOutput {
                tt,
                pivots: PivotSets::default(),
                sweeps: 1,
                converged: true,
                n_evals: self.n_evals,
                last_direction: Direction::LeftToRight,
            });
        }

        let mut probes: Vec<Vec<usize>> = (0..PROBES)
            .map(|_| random_index(&self.dims, &mut self.rng))
            .collect();
        self.init_right(init)?;
        // Uniform probes of a peaked tensor see only round-off, so the
        // initial pivots, which sit where the initial guess is large, are
        // probed too.
        for suffix in &self.right[1] {
            for k in 0..self.dims[0] {
                let mut idx = Vec::with_capacity(n);
                idx.push(k);
                idx.extend_from_slice(suffix);
                probes.push(idx);
            }
        }

        let mut previous: Option<Vec<f64>> = None;
        let mut result = None;
        let mut converged = false;
        let mut sweeps = 0;
        for pass in 0..self.cfg.n_sweeps {
            let dir = if pass % 2 == 0 {
                Direction::LeftToRight
            } else {
                Direction::RightToLeft
            };
            let tt = match (self.variant, dir) {
                (CrossVariant::Sample, Direction::LeftToRight) => self.one_site_ltr()?,
                (CrossVariant::Sample, Direction::RightToLeft) => self.one_site_rtl()?,
                (CrossVariant::Sweep, Direction::LeftToRight) => self.two_site_ltr()?,
                (CrossVariant::Sweep, Direction::RightToLeft) => self.two_site_rtl()?,
            };
            sweeps += 1;
            let values: Vec<f64> = probes.iter().map(|idx| tt.eval_unchecked(idx)).collect();
            if let Some(prev) = &previous {
                let diff = values
                    .iter()
                    .zip(prev)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
                if diff <= self.cfg.conv_tol * norm {
                    converged = true;
                }
            }
            previous = Some(values);
            result = Some((tt, dir));
            if converged {
                break;
            }
        }
        let (tt, last_direction) = result.expect("at least one pass");
        let pivots = PivotSets {
            left: self.left[1..n].to_vec(),
            right: self.right[1..n].to_vec(),
        };
        Ok(CrossOutput {
            tt,
            pivots,
            sweeps,
            converged,
            n_evals: self.n_evals,
            last_direction,
        })
    }

    // Right pivot sets from a right-to-left pass over the initial guess.
    fn init_right(&mut self, init: &TensorTrain) -> Result<()> {
        let n = self.dims.len();
        let mut z = Array2::<f64>::ones((1, 1));
        for i in (1..n).rev() {
            let y = init.core(i);
            let (r0, ni, _) = y.data().dim();
            let nj = self.right[i + 1].len();
            let w = y.left_unfolding().dot(&z.t());
            let wt = reshape(w, r0, ni * nj).t().to_owned();
            let q = self.basis(&wt, self.caps[i])?;
            let cols = maxvol(&q)?;
            self.set_right(i, &cols);
            z = wt.select(Axis(0), &cols);
            let scale = z.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale > 0.0 {
                z /= scale;
            }
        }
        Ok(())
    }

    // Rows (alpha, k) of the left fibers of core i: |I_i| n_i x ra_{i+1}.
    fn extend_left(&self, i: usize) -> Array2<f64> {
        let core = self.a.core(i);
        let (_, ni, rb) = core.data().dim();
        let rows = self.pl[i].nrows() * ni;
        reshape(self.pl[i].dot(&core.right_unfolding()), rows, rb)
    }

    // Columns (k, beta) of the right fibers of core i: ra_i x n_i |J_{i+1}|.
    fn extend_right(&self, i: usize) -> Array2<f64> {
        let core = self.a.core(i);
        let (ra, ni, _) = core.data().dim();
        let cols = ni * self.pr[i + 1].ncols();
        reshape(core.left_unfolding().dot(&self.pr[i + 1]), ra, cols)
    }

    fn set_left(&mut self, i: usize, pla: &Array2<f64>, rows: &[usize]) {
        let ni = self.dims[i];
        self.left[i + 1] = rows
            .iter()
            .map(|&r| {
                let mut p = self.left[i][r / ni].clone();
                p.push(r % ni);
                p
            })
            .collect();
        self.pl[i + 1] = pla.select(Axis(0), rows);
    }

    fn set_right(&mut self, i: usize, cols: &[usize]) {
        let nj = self.right[i + 1].len();
        let pra = self.extend_right(i);
        self.right[i] = cols
            .iter()
            .map(|&c| {
                let mut p = vec![c / nj];
                p.extend_from_slice(&self.right[i + 1][c % nj]);
                p
            })
            .collect();
        self.pr[i] = pra.select(Axis(1), cols);
    }

    // Applies f in place; on a non-finite value returns its (row, col).
    fn apply(&mut self, mut vals: Array2<f64>) -> std::result::Result<Array2<f64>, NonFinite> {
        self.n_evals += vals.len() as u64;
        for ((r, c), v) in vals.indexed_iter_mut() {
            let y = (self.f)(*v);
            if !y.is_finite() {
                return Err(NonFinite { r, c, value: y });
            }
            *v = y;
        }
        Ok(vals)
    }

    // Index of row (alpha, k_i) and column (k_{i+1}, beta) of the supercore
    // fiber matrix of cores i, i+1; with `two = false` the column is a plain
    // suffix of bond i+1.
    fn fiber_index(&self, i: usize, two: bool, r: usize, c: usize) -> Vec<usize> {
        let ni = self.dims[i];
        let mut idx = self.left[i][r / ni].clone();
        idx.push(r % ni);
        if two {
            let nj = self.right[i + 2].len();
            idx.push(c / nj);
            idx.extend_from_slice(&self.right[i + 2][c % nj]);
        } else {
            idx.extend_from_slice(&self.right[i + 1][c]);
        }
        idx
    }

    // Orthonormal basis of the dominant column space of `m`, padded with
    // random directions, for a bond of at most `cap` useful rank.
    fn basis(&mut self, m: &Array2<f64>, cap: usize) -> Result<Array2<f64>> {
        let (u, sv, _) = svd(m)?;
        let total = sv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let delta = self.cfg.trunc_tol * total / (self.dims.len() as f64).sqrt();
        let rows = m.nrows();
        let limit = self.cfg.max_rank.min(cap).min(rows);
        let k = chop(&sv, delta, limit);
        let c = (k + self.cfg.sample_oversample).min(limit);
        let u = u.slice(s![.., ..k]);
        if c == k {
            return Ok(u.to_owned());
        }
        let mut g = Array2::from_shape_simple_fn((rows, c - k), || self.rng.sample(StandardNormal));
        for _ in 0..2 {
            g = &g - &u.dot(&u.t().dot(&g));
        }
        let (q, _) = qr(&g)?;
        Ok(concatenate![Axis(1), u, q])
    }

    fn interpolate(&mut self, m: &Array2<f64>, cap: usize) -> Result<(Array2<f64>, Vec<usize>)> {
        let q = self.basis(m, cap)?;
        let rows = maxvol(&q)?;
        let core = right_solve(&q, &q.select(Axis(0), &rows))?;
        Ok((core, rows))
    }

    fn one_site_ltr(&mut self) -> Result<TensorTrain> {
        let n = self.dims.len();
        let mut cores = Vec::with_capacity(n);
        for i in 0..n {
            let pla = self.extend_left(i);
            let vals = pla.dot(&self.pr[i + 1]);
            let m = self
                .apply(vals)
                .map_err(|e| e.at(|r, c| self.fiber_index(i, false, r, c)))?;
            let ri = self.left[i].len();
            if i == n - 1 {
                cores.push(Core::from_left_unfolding(m, ri, self.dims[i]));
                break;
            }
            let (core, rows) = self.interpolate(&m, self.caps[i + 1])?;
            cores.push(Core::from_left_unfolding(core, ri, self.dims[i]));
            self.set_left(i, &pla, &rows);
        }
        TensorTrain::new(cores)
    }

    fn one_site_rtl(&mut self) -> Result<TensorTrain> {
        let n = self.dims.len();
        let mut cores = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let ni = self.dims[i];
            let nj = self.right[i + 1].len();
            let vals = self.pl[i].dot(&self.extend_right(i));
            let m = self.apply(vals).map_err(|e| {
                e.at(|r, c| {
                    let mut idx = self.left[i][r].clone();
                    idx.push(c / nj);
                    idx.extend_from_slice(&self.right[i + 1][c % nj]);
                    idx
                })
            })?;
            if i == 0 {
                cores.push(Core::from_right_unfolding(m, ni, nj));
                break;
            }
            let (core, cols) = self.interpolate(&m.t().to_owned(), self.caps[i])?;
            cores.push(Core::from_right_unfolding(core.t().to_owned(), ni, nj));
            self.set_right(i, &cols);
        }
        cores.reverse();
        TensorTrain::new(cores)
    }

    fn two_site_ltr(&mut self) -> Result<TensorTrain> {
        let n = self.dims.len();
        let mut cores = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let pla = self.extend_left(i);
            let vals = pla.dot(&self.extend_right(i + 1));
            let m = self
                .apply(vals)
                .map_err(|e| e.at(|r, c| self.fiber_index(i, true, r, c)))?;
            let ri = self.left[i].len();
            let (core, rows) = self.interpolate(&m, self.caps[i + 1])?;
            cores.push(Core::from_left_unfolding(core, ri, self.dims[i]));
            self.set_left(i, &pla, &rows);
            if i == n - 2 {
                let last = m.select(Axis(0), &rows);
                cores.push(Core::from_right_unfolding(last, self.dims[i + 1], 1));
            }
        }
        TensorTrain::new(cores)
    }

    fn two_site_rtl(&mut self) -> Result<TensorTrain> {
        let n = self.dims.len();
        let mut cores = Vec::with_capacity(n);
        for i in (1..n).rev() {
            let vals = self.extend_left(i - 1).dot(&self.extend_right(i));
            let m = self
                .apply(vals)
                .map_err(|e| e.at(|r, c| self.fiber_index(i - 1, true, r, c)))?;
            let nj = self.right[i + 1].len();
            let (core, cols) = self.interpolate(&m.t().to_owned(), self.caps[i])?;
            cores.push(Core::from_right_unfolding(core.t().to_owned(), self.dims[i], nj));
            self.set_right(i, &cols);
            if i == 1 {
                let first = m.select(Axis(1), &cols);
                cores.push(Core::from_left_unfolding(first, 1, self.dims[0]));
            }
        }
        cores.reverse();
        TensorTrain::new(cores)
    }
}
