use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ttinfer::config::{RunOptions, ScenarioKind};
use ttinfer::sim::{rank_histograms, run_sweep};

/// Tensor-train symbol-wise MAP detection and decoding experiments.
#[derive(Debug, Parser)]
#[command(name = "ttinfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Symbol error rate of MIMO detectors over an SNR grid.
    Mimo(RunOptions),
    /// Bit error rate of the adaptive-rank decoder over an E_b/N_0 grid.
    Decode(RunOptions),
    /// Rank histograms from a per-trial dump.
    Ranks {
        /// Dump written by `mimo --dump` or `decode --dump`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output CSV; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(opts: RunOptions, kind: ScenarioKind) -> Result<()> {
    let opts = opts.resolve()?;
    let cfg = opts.to_sim_config(kind)?;
    let result = run_sweep(&cfg)?;
    for row in &result.rows {
        if row.failures > 0 {
            eprintln!(
                "{} at {} dB: {} of {} trials failed inference",
                row.detector, row.snr_db, row.failures, row.trials
            );
        }
    }
    result.write_csv(output(opts.out.as_ref())?, cfg.timing)?;
    if let Some(path) = &opts.dump {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        result.write_trial_dump(BufWriter::new(file))?;
    }
    Ok(())
}

fn ranks(input: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let groups = rank_histograms(&text)?;
    let mut w = csv::Writer::from_writer(output(out.as_ref())?);
    w.write_record(["detector", "snr_db", "rank", "count"])?;
    for (detector, snr, stats) in &groups {
        eprintln!(
            "{detector} at {snr} dB: mean {:.2}, median {}, max {}",
            stats.mean, stats.median, stats.max
        );
        for (rank, count) in &stats.histogram {
            w.write_record([detector.clone(), snr.to_string(), rank.to_string(), count.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Mimo(opts) => simulate(opts, ScenarioKind::Mimo),
        Command::Decode(opts) => simulate(opts, ScenarioKind::Decode),
        Command::Ranks { input, out } => ranks(input, out),
    }
}
