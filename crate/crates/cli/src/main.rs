// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! `osqec` command-line driver.
//!
//! Exit status: 0 on a positive verdict, 2 on a negative one, 1 on usage or
//! input errors.

mod commands;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use osqec_core::io::{load_channel, load_code};

use commands::{Scenario, SplitSource, Verdict};

#[derive(Parser, Debug)]
#[command(name = "osqec", version, about = "Open-system quantum error correction checks")]
struct Cli {
    /// Condition tolerance.
    #[arg(long, global = true, env = "OSQEC_TOL", default_value_t = 1e-9)]
    tol: f64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long)]
    channel: PathBuf,

    #[arg(long)]
    code: PathBuf,

    /// Correctable channel defining the recovery; defaults to the stored
    /// channel.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SplitArgs {
    /// Project each slice onto the correctable span.
    #[arg(long)]
    auto_split: bool,

    /// Read the correctable part from a split file.
    #[arg(long)]
    split: Option<PathBuf>,
}

impl SplitArgs {
    fn source(&self) -> SplitSource<'_> {
        match &self.split {
            Some(p) => SplitSource::File(p),
            None => SplitSource::Auto,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the perfect-correction conditions and verify the recovery.
    CheckPerfect {
        #[command(flatten)]
        inputs: Inputs,
        /// Perturbation scale applied to the stored channel.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fidelity-loss bound with a sampled worst-case loss for comparison.
    Bound {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        refine: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sampled worst-case fidelity loss of the universal recovery.
    WorstCase {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        refine: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check the recovered-state expansion over a sweep of scales.
    VerifyExpansion {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        split: SplitArgs,
        /// Comma-separated scales; defaults to 0.1,0.05,0.025 when the
        /// channel file has a perturbation and to 0 otherwise.
        #[arg(long, value_delimiter = ',')]
        t_sweep: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Aggregate report over every bundled scenario.
    Report {
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        refine: usize,
        #[arg(long, default_value_t = 20)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load(inputs: &Inputs) -> Result<Scenario> {
    let channel = load_channel(&inputs.channel)?;
    let code = load_code(&inputs.code)?;
    let reference = match &inputs.reference {
        Some(p) => Some(load_channel(p)?.channel),
        None => None,
    };
    Ok(Scenario {
        channel,
        code,
        reference,
    })
}

fn run(cli: &Cli) -> Result<(report::Report, Verdict)> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        bail!("tolerance must be positive, got {}", cli.tol);
    }
    let tol = cli.tol;
    match &cli.command {
        Command::CheckPerfect {
            inputs,
            t,
            states,
            seed,
        } => commands::check_perfect(&load(inputs)?, *t, tol, *states, *seed),
        Command::Bound {
            inputs,
            split,
            t,
            samples,
            refine,
            seed,
        } => commands::bound(&load(inputs)?, *t, &split.source(), tol, *samples, *refine, *seed),
        Command::WorstCase {
            inputs,
            t,
            samples,
            refine,
            seed,
        } => commands::worst_case(&load(inputs)?, *t, tol, *samples, *refine, *seed),
        Command::VerifyExpansion {
            inputs,
            split,
            t_sweep,
            states,
            seed,
        } => {
            let sc = load(inputs)?;
            let sweep = match t_sweep {
                Some(s) => s.clone(),
                None if sc.channel.perturbation.is_some() => vec![0.1, 0.05, 0.025],
                None => vec![0.0],
            };
            commands::verify_expansion(&sc, &sweep, &split.source(), tol, *states, *seed)
        }
        Command::Report {
            samples,
            refine,
            states,
            seed,
        } => commands::aggregate(tol, *samples, *refine, *states, *seed),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    let result = run(&cli).and_then(|(report, verdict)| {
        emit(report.render(), cli.out.as_deref())?;
        Ok(verdict)
    });
    eprintln!("elapsed = {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
