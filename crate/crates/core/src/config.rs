//! Run options shared by the command line and TOML configuration files.
//! A flag given on the command line overrides the same key in the file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::code::load_code;
use crate::error::{InferError, Result};
use crate::mimo::SnrMode;
use crate::sim::{parse_grid, parse_list, Detector, SimConfig, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Mimo,
    Decode,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunOptions {
    /// TOML file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Complex transmit (= receive) antennas.
    #[arg(long)]
    pub nt: Option<usize>,
    /// Square QAM order.
    #[arg(long)]
    pub qam: Option<usize>,
    /// SNR grid in dB, `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// `expected` (fixed noise variance) or `realized` (per-trial rescaling).
    #[arg(long)]
    pub snr_mode: Option<String>,

    /// Generator matrix file.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// E_b/N_0 grid in dB, `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub ebn0: Option<String>,
    /// Comma-separated Taylor rank caps of the adaptive decoder.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Divisor between the block-error target and the early-stop miss rate.
    #[arg(long)]
    pub safety: Option<f64>,

    /// Comma-separated detectors: sample, sweep, oracle, lmmse.
    #[arg(long, alias = "variant")]
    pub detectors: Option<String>,
    /// Taylor rank cap of the MIMO detector.
    #[arg(long)]
    pub rmax: Option<usize>,
    /// Taylor order of the exponential.
    #[arg(long)]
    pub taylor_p: Option<usize>,
    /// Rounding tolerance of the log-posterior tensor train.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Rank cap inside the cross approximation.
    #[arg(long)]
    pub cross_rank: Option<usize>,
    /// Directional passes of the cross approximation.
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Random directions added to each cross step.
    #[arg(long)]
    pub oversample: Option<usize>,
    /// Relative probe change that ends the cross approximation.
    #[arg(long)]
    pub conv_tol: Option<f64>,
    /// Relative SVD tolerance inside the cross approximation.
    #[arg(long)]
    pub trunc_tol: Option<f64>,

    /// Stop a grid point after this many block errors of the reference
    /// detector (the oracle if enabled, else the first detector).
    #[arg(long)]
    pub min_block_errors: Option<u64>,
    /// Trial cap per grid point.
    #[arg(long)]
    pub max_trials: Option<u64>,
    /// Run exactly this many trials per grid point.
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed; every trial draws from its own stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Record wall time in the CSV.
    #[arg(long)]
    #[serde(default)]
    pub timing: bool,
    /// Output CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trial dump for the `ranks` command.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

impl RunOptions {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| InferError::Config(e.to_string()))
    }

    /// Loads `self.config`, if any, and lets the fields set here win.
    pub fn resolve(self) -> Result<Self> {
        match self.config.clone() {
            Some(path) => {
                let text = std::fs::read_to_string(&path)?;
                let file = Self::from_toml(&text)?;
                Ok(self.over(file, path.parent()))
            }
            None => Ok(self),
        }
    }

    /// `self` with unset fields taken from `file`. Relative paths in the
    /// file are resolved against `base`.
    pub fn over(self, file: RunOptions, base: Option<&Path>) -> Self {
        let rebase = |p: PathBuf| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        };
        Self {
            config: self.config,
            nt: self.nt.or(file.nt),
            qam: self.qam.or(file.qam),
            snr: self.snr.or(file.snr),
            snr_mode: self.snr_mode.or(file.snr_mode),
            code: self.code.or(file.code.map(rebase)),
            ebn0: self.ebn0.or(file.ebn0),
            schedule: self.schedule.or(file.schedule),
            safety: self.safety.or(file.safety),
            detectors: self.detectors.or(file.detectors),
            rmax: self.rmax.or(file.rmax),
            taylor_p: self.taylor_p.or(file.taylor_p),
            tol: self.tol.or(file.tol),
            cross_rank: self.cross_rank.or(file.cross_rank),
            sweeps: self.sweeps.or(file.sweeps),
            oversample: self.oversample.or(file.oversample),
            conv_tol: self.conv_tol.or(file.conv_tol),
            trunc_tol: self.trunc_tol.or(file.trunc_tol),
            min_block_errors: self.min_block_errors.or(file.min_block_errors),
            max_trials: self.max_trials.or(file.max_trials),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            workers: self.workers.or(file.workers),
            timing: self.timing || file.timing,
            out: self.out.or(file.out.map(rebase)),
            dump: self.dump.or(file.dump.map(rebase)),
        }
    }

    pub fn to_sim_config(&self, kind: ScenarioKind) -> Result<SimConfig> {
        let missing = |what: &str| InferError::Config(format!("missing option `{what}`"));
        let mut cfg = match kind {
            ScenarioKind::Mimo => {
                let mut cfg = SimConfig::mimo(self.nt.ok_or_else(|| missing("nt"))?, self.qam.unwrap_or(4));
                cfg.grid = parse_grid(self.snr.as_deref().ok_or_else(|| missing("snr"))?)?;
                if let Some(mode) = &self.snr_mode {
                    let mode = match mode.as_str() {
                        "expected" => SnrMode::Expected,
                        "realized" => SnrMode::Realized,
                        other => return Err(InferError::Config(format!("unknown SNR mode `{other}`"))),
                    };
                    if let crate::sim::Scenario::Mimo { snr_mode, .. } = &mut cfg.scenario {
                        *snr_mode = mode;
                    }
                }
                cfg
            }
            ScenarioKind::Decode => {
                let code = load_code(self.code.as_ref().ok_or_else(|| missing("code"))?)?;
                let mut cfg = SimConfig::decode(code);
                cfg.grid = parse_grid(self.ebn0.as_deref().ok_or_else(|| missing("ebn0"))?)?;
                if let Some(s) = &self.schedule {
                    cfg.schedule = parse_list(s)?;
                }
                cfg
            }
        };
        if let Some(d) = &self.detectors {
            cfg.detectors = parse_list::<Detector>(d)?;
        }
        if let Some(v) = self.rmax {
            cfg.taylor_max_rank = v;
        }
        if let Some(v) = self.taylor_p {
            cfg.taylor_p = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.safety {
            cfg.safety = v;
        }
        if let Some(v) = self.cross_rank {
            cfg.cross.max_rank = v;
        }
        if let Some(v) = self.sweeps {
            cfg.cross.n_sweeps = v;
        }
        if let Some(v) = self.oversample {
            cfg.cross.sample_oversample = v;
        }
        if let Some(v) = self.conv_tol {
            cfg.cross.conv_tol = v;
        }
        if let Some(v) = self.trunc_tol {
            cfg.cross.trunc_tol = v;
        }
        cfg.stop = match self.trials {
            Some(n) => StopRule {
                min_block_errors: None,
                max_trials: n,
            },
            None => StopRule {
                min_block_errors: Some(self.min_block_errors.unwrap_or(100)),
                max_trials: self.max_trials.unwrap_or(cfg.stop.max_trials),
            },
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.timing = self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}
