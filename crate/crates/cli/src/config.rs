//! Run configuration: defaults, config files, flag overrides and validation.

use std::path::{Path, PathBuf};

use approach_core::hjb::{Order, SchemeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Value,
    Classify,
    Synthesize,
    Simulate,
    Scan,
    Ot,
    Pm,
    Wsim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Value => "value",
            Command::Classify => "classify",
            Command::Synthesize => "synthesize",
            Command::Simulate => "simulate",
            Command::Scan => "scan",
            Command::Ot => "ot",
            Command::Pm => "pm",
            Command::Wsim => "wsim",
        }
    }

    pub fn default_out(self) -> &'static str {
        match self {
            Command::Value => "value.json",
            Command::Classify => "classify.json",
            Command::Synthesize => "strategy.json",
            Command::Simulate => "trajectory.csv",
            Command::Scan => "scan.csv",
            Command::Ot => "ot.json",
            Command::Pm => "etilde.json",
            Command::Wsim => "wsim.csv",
        }
    }

    fn uses_scheme(self) -> bool {
        matches!(self, Command::Value | Command::Classify | Command::Synthesize | Command::Simulate | Command::Scan)
    }
}

/// Fully resolved configuration. Serialized verbatim into every provenance
/// header; input paths are stored as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub game: Option<String>,
    pub target: Option<String>,
    pub signals: Option<String>,
    pub mu: Option<String>,
    pub nu: Option<String>,
    pub s0: f64,
    pub sgrid: usize,
    pub ggrid: usize,
    pub actions: usize,
    pub order: Order,
    pub n: Vec<usize>,
    #[serde(rename = "N")]
    pub delay: usize,
    pub delta: f64,
    pub seed: u64,
    pub tol: f64,
    pub strategy: Option<String>,
    pub adversary: Option<String>,
}

/// Partial configuration, as read from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub command: Option<Command>,
    pub game: Option<String>,
    pub target: Option<String>,
    pub signals: Option<String>,
    pub mu: Option<String>,
    pub nu: Option<String>,
    pub s0: Option<f64>,
    pub sgrid: Option<usize>,
    pub ggrid: Option<usize>,
    pub actions: Option<usize>,
    pub order: Option<Order>,
    pub n: Option<Vec<usize>>,
    #[serde(rename = "N")]
    pub delay: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub strategy: Option<String>,
    pub adversary: Option<String>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let lifted = matches!(command, Command::Pm | Command::Wsim);
        RunConfig {
            command,
            game: None,
            target: None,
            signals: None,
            mu: None,
            nu: None,
            s0: 0.01,
            sgrid: 200,
            ggrid: 201,
            actions: if lifted { 3 } else { 21 },
            order: Order::MinMax,
            n: match command {
                Command::Scan => vec![100, 1000, 5000],
                Command::Wsim => vec![2000],
                _ => vec![1000],
            },
            delay: 50,
            delta: 0.1,
            seed: 0,
            tol: approach_core::hjb::DEFAULT_VERDICT_TOL,
            strategy: match command {
                Command::Simulate => Some("nadc".into()),
                Command::Wsim => Some("greedy".into()),
                _ => None,
            },
            adversary: match command {
                Command::Simulate | Command::Wsim => Some("best_response".into()),
                Command::Scan => Some("best_response+random+pure:all".into()),
                _ => None,
            },
        }
    }

    /// Overwrites every field that `s` sets.
    pub fn apply(&mut self, s: Settings) -> CliResult<()> {
        if let Some(c) = s.command {
            if c != self.command {
                return Err(CliError::Config(format!(
                    "command: config is for {:?}, running {:?}",
                    c.name(),
                    self.command.name()
                )));
            }
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if s.$f.is_some() { self.$f = s.$f; } )* };
        }
        macro_rules! set_val {
            ($($f:ident),*) => { $( if let Some(v) = s.$f { self.$f = v; } )* };
        }
        set!(game, target, signals, mu, nu, strategy, adversary);
        set_val!(s0, sgrid, ggrid, actions, order, n, delay, delta, seed, tol);
        Ok(())
    }

    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig::new(self.s0, self.sgrid, self.ggrid, self.actions, self.order)
    }

    /// Per-command schema check.
    pub fn validate(&self) -> CliResult<()> {
        let need = |v: &Option<String>, flag: &str| -> CliResult<()> {
            match v {
                Some(_) => Ok(()),
                None => Err(CliError::Config(format!("--{flag} is required for {}", self.command.name()))),
            }
        };
        match self.command {
            Command::Ot => {
                need(&self.mu, "mu")?;
                need(&self.nu, "nu")?;
            }
            _ => {
                need(&self.game, "game")?;
                need(&self.target, "target")?;
            }
        }
        if self.command.uses_scheme() {
            self.scheme().validate()?;
        }
        if matches!(self.command, Command::Pm | Command::Wsim) && self.actions < 2 {
            return Err(CliError::Config("actions: resolution must be at least 2".into()));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(CliError::Config("n: horizons must be positive".into()));
        }
        if matches!(self.command, Command::Simulate | Command::Wsim) && self.n.len() != 1 {
            return Err(CliError::Config(format!("n: {} takes a single horizon", self.command.name())));
        }
        if self.command == Command::Scan && self.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("n: horizons must be increasing".into()));
        }
        if self.delay == 0 {
            return Err(CliError::Config("N: delay must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CliError::Config("delta: must be positive".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config("tol: must be non-negative".into()));
        }
        Ok(())
    }
}

/// Reads settings from a plain settings file or from the provenance header of
/// a previous output.
pub fn read_settings(path: &Path) -> CliResult<Settings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Config(format!("config {}: {e}", path.display()));
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix(crate::output::CSV_PROVENANCE)) {
        let p: crate::output::Provenance = serde_json::from_str(line).map_err(bad)?;
        return Ok(p.config.into());
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    match value.get("provenance") {
        Some(p) => {
            let p: crate::output::Provenance = serde_json::from_value(p.clone()).map_err(bad)?;
            Ok(p.config.into())
        }
        None => serde_json::from_value(value).map_err(bad),
    }
}

impl From<RunConfig> for Settings {
    fn from(c: RunConfig) -> Self {
        Settings {
            command: Some(c.command),
            game: c.game,
            target: c.target,
            signals: c.signals,
            mu: c.mu,
            nu: c.nu,
            s0: Some(c.s0),
            sgrid: Some(c.sgrid),
            ggrid: Some(c.ggrid),
            actions: Some(c.actions),
            order: Some(c.order),
            n: Some(c.n),
            delay: Some(c.delay),
            delta: Some(c.delta),
            seed: Some(c.seed),
            tol: Some(c.tol),
            strategy: c.strategy,
            adversary: c.adversary,
        }
    }
}

/// Command-line flags shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Game file: {"payoffs": [[[..], ..], ..]} (rows x columns x payoff dimension).
    #[arg(long)]
    pub game: Option<String>,
    /// Target file: {"type": "half_space" | "ball" | "polytope" | "union", ..}.
    #[arg(long)]
    pub target: Option<String>,
    /// Signal file: {"signals": [[..], ..]}, one signal vector per column action. Defaults to full monitoring.
    #[arg(long)]
    pub signals: Option<String>,
    /// First measure file: {"support": [[..], ..], "weights": [..]}.
    #[arg(long)]
    pub mu: Option<String>,
    /// Second measure file.
    #[arg(long)]
    pub nu: Option<String>,
    /// Initial time of the differential game.
    #[arg(long)]
    pub s0: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    pub sgrid: Option<usize>,
    /// Nodes per payoff dimension.
    #[arg(long)]
    pub ggrid: Option<usize>,
    /// Points per simplex edge in the action grids.
    #[arg(long)]
    pub actions: Option<usize>,
    /// minmax (upper value) or maxmin (lower value).
    #[arg(long)]
    pub order: Option<String>,
    /// Horizon, or comma-separated increasing horizons for scan.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Delay: the strategy reacts every 1/N of normalized time.
    #[arg(long = "N")]
    pub delay: Option<usize>,
    /// Smoothing radius for the lifted game.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Random seed for randomized adversaries.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Verdict tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// simulate: nadc | stationary:w0,w1,..  wsim: greedy | fixed:w0,w1,..
    #[arg(long)]
    pub strategy: Option<String>,
    /// simulate: best_response | random | pure:j | stationary:w0,w1,..
    /// scan: '+'-separated list of those, pure:all expands to every column.
    /// wsim: best_response | potential_maximin | random | stationary:w0,w1,..
    #[arg(long)]
    pub adversary: Option<String>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra CSV export (value: value slices; ot: transport plan).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Settings file, or a previous output whose provenance header is reused.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Flags {
    pub fn settings(&self) -> CliResult<Settings> {
        let order = match &self.order {
            Some(o) => Some(o.parse::<Order>()?),
            None => None,
        };
        Ok(Settings {
            command: None,
            game: self.game.clone(),
            target: self.target.clone(),
            signals: self.signals.clone(),
            mu: self.mu.clone(),
            nu: self.nu.clone(),
            s0: self.s0,
            sgrid: self.sgrid,
            ggrid: self.ggrid,
            actions: self.actions,
            order,
            n: self.n.clone(),
            delay: self.delay,
            delta: self.delta,
            seed: self.seed,
            tol: self.tol,
            strategy: self.strategy.clone(),
            adversary: self.adversary.clone(),
        })
    }

    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self, command: Command) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::defaults(command);
        if let Some(p) = &self.config {
            cfg.apply(read_settings(p)?)?;
        }
        cfg.apply(self.settings()?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
