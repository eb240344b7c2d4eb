// SPDX-License-Identifier: Apache-2.0

//! Command-line harness: configuration, sweeps and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gparity::dynamics::Engine;

pub use config::{Resolved, RunConfig, SweepAxis};
pub use error::{CliError, CliResult};
use output::Outputs;

#[derive(Debug, Parser)]
#[command(
    name = "gparity",
    version,
    about = "Generalized parity measurements and cat-state preparation"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub engine: Option<Engine>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Photon-number cutoff override.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Drop the qubit-dependent Kerr term.
    #[arg(long, global = true)]
    pub no_kerr: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub r: Option<u32>,
    /// Protocol repetitions.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub nbar: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Phase table (CSV or JSON) replacing the analytic one.
    #[arg(long)]
    pub phases: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic (or optimized) processing phases.
    Phases {
        r: u32,
        /// Optimize a sequence of this depth.
        #[arg(long)]
        optimize: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Ancilla response over a range of photon numbers.
    Response {
        r: u32,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        m_min: Option<i64>,
        #[arg(long)]
        m_max: Option<i64>,
        #[arg(long)]
        phases: Option<PathBuf>,
    },
    /// Approximation-error table over a modulus range.
    Delta {
        r_min: u32,
        r_max: u32,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Single cat-state preparation run.
    Prepare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Independent preparation runs along `r` or `nbar`.
    Sweep {
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Full simulation against the first-order estimates.
    PertCompare {
        /// Comma-separated mean photon numbers.
        #[arg(long, value_delimiter = ',')]
        nbar_values: Vec<f64>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        dt_max: Option<f64>,
    },
}

impl RunArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            r: self.r,
            s: self.s,
            nbar: self.nbar,
            trajectories: self.trajectories,
            dt_max: self.dt_max,
            phases_file: self.phases,
            ..Default::default()
        }
    }
}

impl Cli {
    /// Flag values as a partial config.
    fn flags(&mut self) -> RunConfig {
        let mut c = match std::mem::replace(
            &mut self.command,
            Command::Prepare {
                run: RunArgs::default(),
            },
        ) {
            Command::Phases {
                r,
                optimize,
                tol,
                max_iter,
            } => RunConfig {
                r: Some(r),
                optimize_depth: optimize,
                tol,
                max_iter,
                ..Default::default()
            },
            Command::Response {
                r,
                k,
                m_min,
                m_max,
                phases,
            } => RunConfig {
                r: Some(r),
                k,
                m_min,
                m_max,
                phases_file: phases,
                ..Default::default()
            },
            Command::Delta { r_min, r_max, k } => RunConfig {
                r_min: Some(r_min),
                r_max: Some(r_max),
                k,
                ..Default::default()
            },
            Command::Prepare { run } => run.into_config(),
            Command::Sweep { axis, values, run } => RunConfig {
                sweep_axis: axis,
                sweep_values: (!values.is_empty()).then_some(values),
                ..run.into_config()
            },
            Command::PertCompare {
                nbar_values,
                s,
                trajectories,
                dt_max,
            } => RunConfig {
                nbar_values: (!nbar_values.is_empty()).then_some(nbar_values),
                s,
                trajectories,
                dt_max,
                ..Default::default()
            },
        };
        c.seed = self.seed;
        c.jobs = self.jobs;
        c.engine = self.engine;
        c.out = self.out.clone();
        c.dim = self.dim;
        if self.no_kerr {
            c.no_kerr = Some(true);
        }
        c
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Phases { .. } => "phases",
        Command::Response { .. } => "response",
        Command::Delta { .. } => "delta",
        Command::Prepare { .. } => "prepare",
        Command::Sweep { .. } => "sweep",
        Command::PertCompare { .. } => "pert-compare",
    }
}

/// Runs a parsed command line and returns the files written.
pub fn execute(mut cli: Cli) -> CliResult<Vec<PathBuf>> {
    let start = Instant::now();
    let name = command_name(&cli.command);
    // the key validation for positional modulus happens in `resolve`
    let is_delta = matches!(cli.command, Command::Delta { .. });
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut merged = base.merge(cli.flags());
    if is_delta && merged.r.is_none() {
        // `k` is validated against the smallest modulus of the table
        merged.r = merged.r_min;
    }
    let cfg = merged.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut out = Outputs::new(&cfg.out)?;
    pool.install(|| -> CliResult<()> {
        match name {
            "phases" => commands::cmd_phases(&cfg, &mut out),
            "response" => commands::cmd_response(&cfg, &mut out),
            "delta" => commands::cmd_delta(&cfg, &mut out),
            "prepare" => commands::cmd_prepare(&cfg, &mut out).map(|_| ()),
            "sweep" => commands::cmd_sweep(&cfg, &mut out).map(|_| ()),
            _ => commands::cmd_pert_compare(&cfg, &mut out).map(|_| ()),
        }
    })?;
    out.timing(name, start.elapsed().as_secs_f64())?;
    Ok(out.files)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> CliResult<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(cli)
}
