//! `ipnsw` — build navigable-small-world indexes for maximum inner product
//! search, compute exact baselines, run recall/latency sweeps, and measure
//! norm bias. Errors are reported as `error[category]: ...` with a nonzero
//! exit code.

mod cli;
mod commands;
mod config;
mod output;

use clap::Parser;

use crate::cli::{Cli, Command};

fn main() {
    let parsed = Cli::parse();
    if let Err(err) = run(&parsed) {
        eprintln!("error[{}]: {:#}", categorize(&err), err);
        std::process::exit(1);
    }
}

fn run(parsed: &Cli) -> anyhow::Result<()> {
    match &parsed.command {
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Build(args) => commands::cmd_build(args),
        Command::Groundtruth(args) => commands::cmd_groundtruth(args),
        Command::Bench(args) => commands::cmd_bench(args),
        Command::Analyze { command } => commands::cmd_analyze(command),
    }
}

/// Walks the error chain for the most specific category: library errors carry
/// their own, bare I/O failures map to `io`, anything else is a usage problem.
fn categorize(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ipnsw::Error>() {
            return e.category();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "config"
}
