//! `approach`: command-line front end for `approach-core`.
//!
//! Every command reads JSON inputs, writes one output file that starts with a
//! provenance header, and prints a short summary. Passing an earlier output to
//! `--config` re-runs it; the new file matches the old one byte for byte
//! apart from the `generated_unix` line.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical error, 4 infeasible model.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, Flags, RunConfig, Settings};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "approach", version, about = "Weak approachability: values, strategies, simulation, transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Solve the value grid; JSON output (summary + grid). --csv: columns s,g0..,V.
    Value(Flags),
    /// V(0) estimate, bound and verdict; JSON output.
    Classify(Flags),
    /// Delayed strategy for player 1; JSON output (N, s0, g0, x0, scheme).
    Synthesize(Flags),
    /// One repeated-game run; CSV columns m,x0..,y0..,g0..,gbar0..,dist.
    Simulate(Flags),
    /// Worst final distance per horizon; CSV columns n,max_dist,argmax_adversary.
    Scan(Flags),
    /// Exact W2 between --mu and --nu; JSON output. --csv: columns i,j,mass.
    Ot(Flags),
    /// Compatible-measure polytope on the action x signal grid; JSON output.
    Pm(Flags),
    /// Lifted-game simulation; CSV columns m,W2sq,W2.
    Wsim(Flags),
}

impl Sub {
    pub fn parts(&self) -> (Command, &Flags) {
        match self {
            Sub::Value(f) => (Command::Value, f),
            Sub::Classify(f) => (Command::Classify, f),
            Sub::Synthesize(f) => (Command::Synthesize, f),
            Sub::Simulate(f) => (Command::Simulate, f),
            Sub::Scan(f) => (Command::Scan, f),
            Sub::Ot(f) => (Command::Ot, f),
            Sub::Pm(f) => (Command::Pm, f),
            Sub::Wsim(f) => (Command::Wsim, f),
        }
    }
}

/// Resolves, executes and writes one command. Returns the summary lines.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    let (command, flags) = cli.command.parts();
    let cfg = flags.resolve(command)?;
    let outcome = match flags.jobs {
        Some(0) => return Err(CliError::Config("jobs: must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Config(format!("jobs: {e}")))?
            .install(|| commands::execute(&cfg, flags.csv.is_some()))?,
        None => commands::execute(&cfg, flags.csv.is_some())?,
    };
    let out = flags.out.clone().unwrap_or_else(|| command.default_out().into());
    output::write(&out, &outcome.main)?;
    if let (Some(path), Some(csv)) = (&flags.csv, &outcome.csv) {
        output::write(path, csv)?;
    }
    if let Some(msg) = outcome.infeasible {
        return Err(CliError::Infeasible(format!("{msg} (output written to {})", out.display())));
    }
    let mut lines = outcome.summary;
    lines.push(format!("wrote {}", out.display()));
    Ok(lines)
}

/// Parses `args`, runs, reports, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
