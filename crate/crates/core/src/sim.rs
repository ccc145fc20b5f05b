//! Monte Carlo error-rate sweeps with paired detectors, rank statistics
//! and CSV output.
//!
//! Trial `t` at grid point `p` draws from its own ChaCha8 stream (stream
//! `p`, word position `t << 40` of the master seed), so results do not
//! depend on the worker count. Trials run in batches; after each batch the
//! point is cut at the first trial where the reference detector reaches
//! the block-error target.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Deserialize;
use tensor_train::cross::{CrossConfig, CrossVariant};

use crate::code::{bitwise_map_oracle, bpsk, CodeLogApp, LinearCode};
use crate::decode::{ttdec, DecodeSettings, StoppingRule, DEFAULT_SAFETY};
use crate::error::{InferError, Result};
use crate::mimo::{build_log_posterior, lmmse_detect, sample_transmission, QamConstellation, SnrMode};
use crate::oracle::{exact_map_oracle, ORACLE_LIMIT};
use crate::posterior::{infer_marginals_from, InferenceSettings};
use crate::stats::n0_from_ebn0;

pub const CSV_HEADER: [&str; 11] = [
    "detector",
    "snr_db",
    "trials",
    "sym_errors",
    "blk_errors",
    "rate",
    "mean_rmax",
    "median_rmax",
    "max_rmax",
    "early_stop_rate",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Sample,
    Sweep,
    Oracle,
    Lmmse,
}

impl Detector {
    fn variant(self) -> Option<CrossVariant> {
        match self {
            Self::Sample => Some(CrossVariant::Sample),
            Self::Sweep => Some(CrossVariant::Sweep),
            _ => None,
        }
    }
}

impl FromStr for Detector {
    type Err = InferError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Self::Sample),
            "sweep" => Ok(Self::Sweep),
            "oracle" => Ok(Self::Oracle),
            "lmmse" => Ok(Self::Lmmse),
            other => Err(InferError::Config(format!("unknown detector `{other}`"))),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sample => "sample",
            Self::Sweep => "sweep",
            Self::Oracle => "oracle",
            Self::Lmmse => "lmmse",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Scenario {
    /// `nt × nt` complex Rayleigh channel with square `qam`-QAM; the grid is
    /// the receiver SNR in dB.
    Mimo { nt: usize, qam: usize, snr_mode: SnrMode },
    /// BPSK over AWGN; the grid is `E_b/N_0` in dB.
    Decode { code: LinearCode },
}

/// When to stop sampling a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Block errors of the reference detector; `None` runs `max_trials`.
    pub min_block_errors: Option<u64>,
    pub max_trials: u64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    pub detectors: Vec<Detector>,
    pub taylor_p: usize,
    /// Taylor rank cap of `ttdet`.
    pub taylor_max_rank: usize,
    /// Rank schedule of `ttdec`.
    pub schedule: Vec<usize>,
    /// Rounding tolerance of the log-posterior tensor train.
    pub tol: f64,
    pub cross: CrossConfig,
    pub safety: f64,
    pub stop: StopRule,
    pub seed: u64,
    pub workers: usize,
    /// Record wall time; otherwise `wall_ms` is written as 0.
    pub timing: bool,
}

impl SimConfig {
    pub fn mimo(nt: usize, qam: usize) -> Self {
        Self::with_scenario(Scenario::Mimo {
            nt,
            qam,
            snr_mode: SnrMode::Expected,
        })
    }

    pub fn decode(code: LinearCode) -> Self {
        let schedule = crate::decode::default_schedule(&code);
        let mut cfg = Self::with_scenario(Scenario::Decode { code });
        cfg.schedule = schedule;
        cfg.cross.sample_oversample = crate::decode::DECODE_OVERSAMPLE;
        cfg
    }

    fn with_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            grid: vec![0.0],
            detectors: vec![Detector::Sample],
            taylor_p: 10,
            taylor_max_rank: 10,
            schedule: vec![10],
            tol: 1e-12,
            cross: CrossConfig::default(),
            safety: DEFAULT_SAFETY,
            stop: StopRule {
                min_block_errors: Some(100),
                max_trials: 1_000_000,
            },
            seed: 0,
            workers: 1,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.iter().any(|s| !s.is_finite()) {
            return Err(InferError::Config("SNR grid must be non-empty and finite".into()));
        }
        if self.detectors.is_empty() {
            return Err(InferError::Config("no detector enabled".into()));
        }
        if self.stop.max_trials == 0 {
            return Err(InferError::Config("trial cap must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(InferError::Config("worker count must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(InferError::Config(format!("tolerance {} must be non-negative", self.tol)));
        }
        if !(self.safety > 0.0) {
            return Err(InferError::Config(format!("safety factor {} must be positive", self.safety)));
        }
        self.cross.validate()?;
        match &self.scenario {
            Scenario::Mimo { nt, qam, .. } => {
                if *nt == 0 {
                    return Err(InferError::Config("nt must be at least 1".into()));
                }
                let l = QamConstellation::new(*qam)?.l();
                if self.detectors.contains(&Detector::Oracle) {
                    let requested = (l as u128).checked_pow(2 * *nt as u32).unwrap_or(u128::MAX);
                    if requested > ORACLE_LIMIT {
                        return Err(InferError::Capacity {
                            requested,
                            limit: ORACLE_LIMIT,
                        });
                    }
                }
            }
            Scenario::Decode { code } => {
                if self.detectors.contains(&Detector::Lmmse) {
                    return Err(InferError::Config("lmmse applies to the mimo scenario only".into()));
                }
                if self.detectors.contains(&Detector::Oracle) && code.k() > crate::code::DMIN_ENUMERATION_LIMIT {
                    return Err(InferError::Capacity {
                        requested: 1u128 << code.k(),
                        limit: 1 << crate::code::DMIN_ENUMERATION_LIMIT,
                    });
                }
                DecodeSettings {
                    schedule: self.schedule.clone(),
                    cross: self.cross.clone(),
                    taylor_p: self.taylor_p,
                    variant: CrossVariant::Sample,
                    tol: self.tol,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    /// Detector whose block errors drive the stopping rule.
    pub fn reference_detector(&self) -> Detector {
        if self.detectors.contains(&Detector::Oracle) {
            Detector::Oracle
        } else {
            self.detectors[0]
        }
    }

    fn symbols_per_trial(&self) -> usize {
        match &self.scenario {
            Scenario::Mimo { nt, .. } => *nt,
            Scenario::Decode { code } => code.k(),
        }
    }
}

/// Outcome of one detector on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorTrial {
    pub detector: Detector,
    /// Wrong complex symbols (mimo) or information bits (decode).
    pub errors: usize,
    pub max_rank: Option<usize>,
    pub early_stop: Option<bool>,
    pub failed: bool,
    pub wall_ns: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: u64,
    pub outcomes: Vec<DetectorTrial>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub detector: Detector,
    pub snr_db: f64,
    pub trials: u64,
    pub sym_errors: u64,
    pub blk_errors: u64,
    /// Symbol (mimo) or bit (decode) error rate.
    pub rate: f64,
    pub ranks: Option<RankStats>,
    pub early_stop_rate: Option<f64>,
    pub failures: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn row(&self, detector: Detector, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.detector == detector && r.snr_db == snr_db)
    }

    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.detector.to_string(),
                r.snr_db.to_string(),
                r.trials.to_string(),
                r.sym_errors.to_string(),
                r.blk_errors.to_string(),
                r.rate.to_string(),
                opt(r.ranks.as_ref().map(|s| s.mean.to_string())),
                opt(r.ranks.as_ref().map(|s| s.median.to_string())),
                opt(r.ranks.as_ref().map(|s| s.max.to_string())),
                opt(r.early_stop_rate.map(|v| v.to_string())),
                if timing { format!("{:.3}", r.wall_ms) } else { "0".into() },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per (trial, detector): the input of the `ranks` command.
    pub fn write_trial_dump<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["detector", "snr_db", "trial", "errors", "max_rank", "early_stop", "failed"])?;
        for t in &self.trials {
            for o in &t.outcomes {
                w.write_record([
                    o.detector.to_string(),
                    t.snr_db.to_string(),
                    t.trial.to_string(),
                    o.errors.to_string(),
                    o.max_rank.map(|r| r.to_string()).unwrap_or_default(),
                    o.early_stop.map(|b| b.to_string()).unwrap_or_default(),
                    o.failed.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankStats {
    pub histogram: BTreeMap<usize, u64>,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

/// Integer histogram with exact mean and median; `None` for no records.
pub fn rank_stats(records: &[usize]) -> Option<RankStats> {
    if records.is_empty() {
        return None;
    }
    let mut histogram = BTreeMap::new();
    for &r in records {
        *histogram.entry(r).or_insert(0) += 1;
    }
    let mut sorted = records.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    Some(RankStats {
        histogram,
        mean: records.iter().map(|&r| r as f64).sum::<f64>() / n as f64,
        median,
        max: sorted[n - 1],
    })
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || InferError::Config(format!("cannot parse grid `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| InferError::Config(format!("cannot parse list item `{t}` in `{s}`")))
        })
        .collect()
}

fn trial_rng(seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point as u64);
    rng.set_word_pos((trial as u128) << 40);
    rng
}

// Observation-independent state of one grid point.
enum PointModel {
    Mimo {
        nt: usize,
        qam: QamConstellation,
        snr_mode: SnrMode,
    },
    Decode {
        app: CodeLogApp,
        n0: f64,
        rule: StoppingRule,
    },
}

struct Runner<'a> {
    cfg: &'a SimConfig,
    model: PointModel,
    snr_db: f64,
    point: usize,
}

impl Runner<'_> {
    fn inference(&self, variant: CrossVariant, seed: u64) -> InferenceSettings {
        let mut cross = self.cfg.cross.clone();
        cross.rng_seed = seed;
        InferenceSettings {
            cross,
            taylor_p: self.cfg.taylor_p,
            taylor_max_rank: self.cfg.taylor_max_rank,
            variant,
        }
    }

    fn run_trial(&self, trial: u64) -> Result<TrialRecord> {
        let mut rng = trial_rng(self.cfg.seed, self.point, trial);
        let outcomes = match &self.model {
            PointModel::Mimo { nt, qam, snr_mode } => self.mimo_trial(*nt, qam, *snr_mode, &mut rng)?,
            PointModel::Decode { app, n0, rule } => self.decode_trial(app, *n0, rule, &mut rng)?,
        };
        Ok(TrialRecord {
            snr_db: self.snr_db,
            trial,
            outcomes,
        })
    }

    fn mimo_trial(
        &self,
        nt: usize,
        qam: &QamConstellation,
        snr_mode: SnrMode,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<DetectorTrial>> {
        let tx = sample_transmission(nt, nt, qam, self.snr_db, snr_mode, rng)?;
        let cross_seed = rng.next_u64();
        let symbol_errors = |d: &[usize]| (0..nt).filter(|&i| d[i] != tx.x_idx[i] || d[i + nt] != tx.x_idx[i + nt]).count();
        let needs_lp = self.cfg.detectors.iter().any(|d| *d != Detector::Lmmse);
        let lp = if needs_lp {
            Some(build_log_posterior(&tx.y, &tx.channel, &qam.alphabet, self.cfg.tol)?)
        } else {
            None
        };
        let lmmse = lmmse_detect(&tx.y, &tx.channel, qam)?;
        let mut out = Vec::with_capacity(self.cfg.detectors.len());
        for &detector in &self.cfg.detectors {
            let start = Instant::now();
            let (decisions, max_rank) = match detector {
                Detector::Sample | Detector::Sweep => {
                    let settings = self.inference(detector.variant().expect("tt detector"), cross_seed);
                    let starts = [lmmse.clone()];
                    match infer_marginals_from(lp.as_ref().expect("built above"), &settings, &starts) {
                        Ok((m, rank)) => (Some(m.argmax()), Some(rank)),
                        Err(InferError::InferenceFailure { max_rank, .. }) => (None, max_rank),
                        Err(InferError::Tt(_)) => (None, None),
                        Err(e) => return Err(e),
                    }
                }
                Detector::Oracle => (Some(exact_map_oracle(lp.as_ref().expect("built above"))?.argmax()), None),
                Detector::Lmmse => (Some(lmmse.clone()), None),
            };
            out.push(DetectorTrial {
                detector,
                errors: decisions.as_deref().map_or(nt, symbol_errors),
                max_rank,
                early_stop: None,
                failed: decisions.is_none(),
                wall_ns: start.elapsed().as_nanos(),
            });
        }
        Ok(out)
    }

    fn decode_trial(
        &self,
        app: &CodeLogApp,
        n0: f64,
        rule: &StoppingRule,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<DetectorTrial>> {
        let code = app.code();
        let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let sigma = (n0 / 2.0).sqrt();
        let y: Vec<f64> = bpsk(&code.encode(&u))
            .iter()
            .map(|&x| x + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let cross_seed = rng.next_u64();
        let bit_errors = |d: &[u8]| d.iter().zip(&u).filter(|(a, b)| a != b).count();
        let mut out = Vec::with_capacity(self.cfg.detectors.len());
        for &detector in &self.cfg.detectors {
            let start = Instant::now();
            let trial = match detector {
                Detector::Sample | Detector::Sweep => {
                    let mut cross = self.cfg.cross.clone();
                    cross.rng_seed = cross_seed;
                    let settings = DecodeSettings {
                        schedule: self.cfg.schedule.clone(),
                        cross,
                        taylor_p: self.cfg.taylor_p,
                        variant: detector.variant().expect("tt detector"),
                        tol: self.cfg.tol,
                    };
                    let o = ttdec(&y, app, n0, rule, &settings)?;
                    DetectorTrial {
                        detector,
                        errors: bit_errors(&o.u),
                        max_rank: Some(o.max_rank),
                        early_stop: Some(o.early_stop),
                        failed: o.failures == o.steps,
                        wall_ns: 0,
                    }
                }
                Detector::Oracle => {
                    let d: Vec<u8> = bitwise_map_oracle(code, &y, n0)?
                        .argmax()
                        .into_iter()
                        .map(|b| b as u8)
                        .collect();
                    DetectorTrial {
                        detector,
                        errors: bit_errors(&d),
                        max_rank: None,
                        early_stop: None,
                        failed: false,
                        wall_ns: 0,
                    }
                }
                Detector::Lmmse => unreachable!("rejected by validate"),
            };
            out.push(DetectorTrial {
                wall_ns: start.elapsed().as_nanos(),
                ..trial
            });
        }
        Ok(out)
    }
}

/// Runs every grid point of `cfg` and aggregates one row per point and
/// detector.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| InferError::Config(e.to_string()))?;
    let reference = cfg.reference_detector();
    let ref_pos = cfg.detectors.iter().position(|&d| d == reference).expect("enabled");
    let batch = (16 * cfg.workers) as u64;
    let mut rows = Vec::new();
    let mut all_trials = Vec::new();
    for (point, &snr_db) in cfg.grid.iter().enumerate() {
        let model = match &cfg.scenario {
            Scenario::Mimo { nt, qam, snr_mode } => PointModel::Mimo {
                nt: *nt,
                qam: QamConstellation::new(*qam)?,
                snr_mode: *snr_mode,
            },
            Scenario::Decode { code } => {
                let n0 = n0_from_ebn0(snr_db, code.rate());
                PointModel::Decode {
                    app: CodeLogApp::new(code.clone())?,
                    n0,
                    rule: StoppingRule::new(code, n0, cfg.safety),
                }
            }
        };
        let runner = Runner {
            cfg,
            model,
            snr_db,
            point,
        };
        let mut trials: Vec<TrialRecord> = Vec::new();
        let mut ref_blocks = 0u64;
        'point: while (trials.len() as u64) < cfg.stop.max_trials {
            let lo = trials.len() as u64;
            let hi = (lo + batch).min(cfg.stop.max_trials);
            let chunk: Vec<TrialRecord> =
                pool.install(|| (lo..hi).into_par_iter().map(|t| runner.run_trial(t)).collect::<Result<_>>())?;
            for record in chunk {
                if record.outcomes[ref_pos].errors > 0 {
                    ref_blocks += 1;
                }
                trials.push(record);
                if cfg.stop.min_block_errors.is_some_and(|target| ref_blocks >= target) {
                    break 'point;
                }
            }
        }
        for (pos, &detector) in cfg.detectors.iter().enumerate() {
            rows.push(aggregate(detector, snr_db, pos, &trials, cfg.symbols_per_trial()));
        }
        all_trials.extend(trials);
    }
    Ok(SweepResult {
        rows,
        trials: all_trials,
    })
}

fn aggregate(detector: Detector, snr_db: f64, pos: usize, trials: &[TrialRecord], symbols: usize) -> SweepRow {
    let outcomes: Vec<&DetectorTrial> = trials.iter().map(|t| &t.outcomes[pos]).collect();
    let n = outcomes.len() as u64;
    let sym_errors: u64 = outcomes.iter().map(|o| o.errors as u64).sum();
    let ranks: Vec<usize> = outcomes.iter().filter_map(|o| o.max_rank).collect();
    let stops: Vec<bool> = outcomes.iter().filter_map(|o| o.early_stop).collect();
    SweepRow {
        detector,
        snr_db,
        trials: n,
        sym_errors,
        blk_errors: outcomes.iter().filter(|o| o.errors > 0).count() as u64,
        rate: if n == 0 { 0.0 } else { sym_errors as f64 / (n as f64 * symbols as f64) },
        ranks: rank_stats(&ranks),
        early_stop_rate: (!stops.is_empty())
            .then(|| stops.iter().filter(|&&b| b).count() as f64 / stops.len() as f64),
        failures: outcomes.iter().filter(|o| o.failed).count() as u64,
        wall_ms: outcomes.iter().map(|o| o.wall_ns as f64).sum::<f64>() / 1e6,
    }
}

/// Per-(detector, SNR) rank histograms from a trial dump.
pub fn rank_histograms(dump: &str) -> Result<Vec<(String, f64, RankStats)>> {
    let mut rdr = csv::Reader::from_reader(dump.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| InferError::Parse {
                line: 1,
                msg: format!("missing column `{name}`"),
            })
    };
    let (cd, cs, cr) = (col("detector")?, col("snr_db")?, col("max_rank")?);
    let mut groups: Vec<((String, f64), Vec<usize>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |msg: String| InferError::Parse { line: i + 2, msg };
        let rank = rec.get(cr).unwrap_or("");
        if rank.is_empty() {
            continue;
        }
        let rank: usize = rank.parse().map_err(|_| parse_err(format!("bad rank `{rank}`")))?;
        let snr: f64 = rec
            .get(cs)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_err("bad snr_db".into()))?;
        let key = (rec.get(cd).unwrap_or("").to_string(), snr);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(rank),
            None => groups.push((key, vec![rank])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|((d, s), v)| (d, s, rank_stats(&v).expect("groups are non-empty")))
        .collect())
}
