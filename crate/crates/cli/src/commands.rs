//! One function per subcommand. Each returns the documents to write and the
//! summary lines for stdout.

use std::sync::Arc;

use approach_core::hjb::{classify, solve_value, value_at_zero, ValueGrid, ZeroValue};
use approach_core::par::Exec;
use approach_core::pm::{build_etilde, EtildePolytope, SignalStructure};
use approach_core::sim::{self, Adversary, RepeatedStrategy};
use approach_core::simplex_grid::grid_actions;
use approach_core::synth::{build_nadc_for, NadcDescriptor, NadcStrategy, Role};
use approach_core::transport::{w2, DiscreteMeasure};
use approach_core::wgame::{run_wsim, WAdversary, WSimConfig, WStrategy};
use approach_core::{MixedAction, SchemeConfig, TargetSet, VectorGame};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_document, json_document};

/// Rendered outputs of one run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub main: String,
    pub csv: Option<String>,
    pub summary: Vec<String>,
    /// Set when the output was written but the model is infeasible.
    pub infeasible: Option<String>,
}

fn load<T: DeserializeOwned>(path: &Option<String>, what: &str) -> CliResult<T> {
    let path = path.as_ref().ok_or_else(|| CliError::Config(format!("--{what} is required")))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{what} file {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{what} file {path}: {e}")))
}

fn load_model(cfg: &RunConfig) -> CliResult<(VectorGame, TargetSet)> {
    let game: VectorGame = load(&cfg.game, "game")?;
    let target: TargetSet = load(&cfg.target, "target")?;
    target.validate()?;
    if target.dim() != game.dim() {
        return Err(CliError::Config(format!(
            "target: dimension {} does not match the payoff dimension {}",
            target.dim(),
            game.dim()
        )));
    }
    Ok((game, target))
}

fn load_signals(cfg: &RunConfig, game: &VectorGame) -> CliResult<SignalStructure> {
    match &cfg.signals {
        Some(_) => load(&cfg.signals, "signals"),
        None => Ok(SignalStructure::full_monitoring(game.cols())),
    }
}

fn parse_weights(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|e| CliError::Config(format!("{what}: bad weight {w:?}: {e}"))))
        .collect()
}

fn mixed(s: &str, n: usize, what: &str) -> CliResult<MixedAction> {
    let w = parse_weights(s, what)?;
    if w.len() != n {
        return Err(CliError::Config(format!("{what}: {} weights for {n} actions", w.len())));
    }
    Ok(MixedAction::new(w)?)
}

fn pure(s: &str, n: usize, what: &str) -> CliResult<MixedAction> {
    let j: usize = s.parse().map_err(|e| CliError::Config(format!("{what}: bad action index {s:?}: {e}")))?;
    if j >= n {
        return Err(CliError::Config(format!("{what}: action {j} out of range (0..{n})")));
    }
    Ok(MixedAction::pure(n, j))
}

#[derive(Serialize)]
struct Summary {
    estimate: f64,
    bound: f64,
    spread: f64,
    slack: f64,
    verdict: String,
}

impl Summary {
    fn new(z: &ZeroValue, tol: f64) -> Self {
        Summary {
            estimate: z.estimate,
            bound: z.bound,
            spread: z.spread,
            slack: z.slack,
            verdict: classify(z, tol).to_string(),
        }
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("V(0) estimate: {}", self.estimate),
            format!("bound: {}", self.bound),
            format!("verdict: {}", self.verdict),
        ]
    }
}

fn solve(cfg: &RunConfig) -> CliResult<(VectorGame, TargetSet, ValueGrid)> {
    let (game, target) = load_model(cfg)?;
    let vg = solve_value(&game, &target, &cfg.scheme())?;
    Ok((game, target, vg))
}

/// Columns `s, g0.., V`, one row per time slice and node.
fn slices_csv(vg: &ValueGrid) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("s");
    for i in 0..vg.grid.dim() {
        let _ = write!(out, ",g{i}");
    }
    out.push_str(",V\n");
    for (k, s) in vg.times.iter().enumerate() {
        for node in 0..vg.grid.len() {
            let _ = write!(out, "{s}");
            for c in vg.grid.coords(node) {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{}", vg.values[k][node]);
        }
    }
    out
}

fn cmd_value(cfg: &RunConfig, want_csv: bool) -> CliResult<Outcome> {
    #[derive(Serialize)]
    struct Doc<'a> {
        summary: Summary,
        grid: &'a ValueGrid,
    }
    let (_, _, vg) = solve(cfg)?;
    let summary = Summary::new(&value_at_zero(&vg), cfg.tol);
    let lines = summary.lines();
    let csv = if want_csv { Some(csv_document(cfg, &slices_csv(&vg))?) } else { None };
    Ok(Outcome { main: json_document(cfg, &Doc { summary, grid: &vg })?, csv, summary: lines, infeasible: None })
}

fn cmd_classify(cfg: &RunConfig) -> CliResult<Outcome> {
    let (_, _, vg) = solve(cfg)?;
    let summary = Summary::new(&value_at_zero(&vg), cfg.tol);
    let lines = summary.lines();
    Ok(Outcome { main: json_document(cfg, &summary)?, summary: lines, ..Outcome::default() })
}

fn player_strategy(cfg: &RunConfig, vg: ValueGrid) -> CliResult<Arc<NadcStrategy>> {
    Ok(Arc::new(build_nadc_for(Arc::new(vg), cfg.delay, Role::Minimizer)?))
}

fn cmd_synthesize(cfg: &RunConfig) -> CliResult<Outcome> {
    #[derive(Serialize)]
    struct Doc<'a> {
        /// The value grid is recomputed from these three.
        game: &'a Option<String>,
        target: &'a Option<String>,
        scheme: SchemeConfig,
        strategy: NadcDescriptor,
        summary: Summary,
    }
    let (_, _, vg) = solve(cfg)?;
    let summary = Summary::new(&value_at_zero(&vg), cfg.tol);
    let strat = player_strategy(cfg, vg)?;
    let d = strat.descriptor();
    let mut lines = summary.lines();
    lines.push(format!("N: {}, s0: {}, x0: {:?}", d.delay, d.s0, d.x0.weights()));
    let doc = Doc { game: &cfg.game, target: &cfg.target, scheme: cfg.scheme(), strategy: d, summary };
    Ok(Outcome { main: json_document(cfg, &doc)?, summary: lines, ..Outcome::default() })
}

fn adversary(
    spec: &str,
    cfg: &RunConfig,
    game: &VectorGame,
    target: &TargetSet,
    best: &mut Option<Adversary>,
) -> CliResult<Vec<Adversary>> {
    let b = game.cols();
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    Ok(match (head, arg) {
        ("best_response", None) => {
            if best.is_none() {
                *best = Some(sim::best_response_adversary(game, target, &cfg.scheme(), cfg.delay)?);
            }
            vec![best.clone().expect("set above")]
        }
        ("random", None) => vec![Adversary::RandomSeeded(0)],
        ("random", Some(k)) => {
            vec![Adversary::RandomSeeded(k.parse().map_err(|e| CliError::Config(format!("adversary: bad seed {k:?}: {e}")))?)]
        }
        ("pure", Some("all")) => (0..b).map(|j| Adversary::Stationary(MixedAction::pure(b, j))).collect(),
        ("pure", Some(j)) => vec![Adversary::Stationary(pure(j, b, "adversary")?)],
        ("stationary", Some(w)) => vec![Adversary::Stationary(mixed(w, b, "adversary")?)],
        _ => return Err(CliError::Config(format!("adversary: unknown spec {spec:?}"))),
    })
}

fn cmd_simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let (game, target, vg) = solve(cfg)?;
    let n = cfg.n[0];
    let spec = cfg.strategy.as_deref().unwrap_or("nadc");
    let player = match spec.split_once(':') {
        None if spec == "nadc" => RepeatedStrategy::induced(player_strategy(cfg, vg)?, n),
        Some(("stationary", w)) => RepeatedStrategy::Stationary(mixed(w, game.rows(), "strategy")?),
        _ => return Err(CliError::Config(format!("strategy: unknown spec {spec:?}"))),
    };
    let advs = adversary(cfg.adversary.as_deref().unwrap_or("best_response"), cfg, &game, &target, &mut None)?;
    if advs.len() != 1 {
        return Err(CliError::Config("adversary: simulate takes a single adversary".into()));
    }
    let tr = sim::run(&game, &target, &player, &advs[0], n, cfg.seed)?;
    let summary = vec![
        format!("adversary: {}", advs[0].name()),
        format!("final average: {:?}", tr.final_average()),
        format!("final distance: {}", tr.final_distance()),
    ];
    Ok(Outcome { main: csv_document(cfg, &tr.to_csv())?, summary, ..Outcome::default() })
}

fn cmd_scan(cfg: &RunConfig) -> CliResult<Outcome> {
    let (game, target, vg) = solve(cfg)?;
    let player = player_strategy(cfg, vg)?;
    let spec = cfg.adversary.as_deref().unwrap_or("best_response");
    let mut best = None;
    let mut suite = Vec::new();
    for part in spec.split('+') {
        suite.extend(adversary(part.trim(), cfg, &game, &target, &mut best)?);
    }
    let rows = sim::convergence_scan(&game, &target, &player, &suite, &cfg.n, cfg.seed, Exec::Parallel)?;
    let summary = rows.iter().map(|r| format!("n={} max_dist={} ({})", r.n, r.max_dist, r.argmax_adversary)).collect();
    Ok(Outcome { main: csv_document(cfg, &sim::scan_csv(&rows))?, summary, ..Outcome::default() })
}

fn cmd_ot(cfg: &RunConfig, want_csv: bool) -> CliResult<Outcome> {
    #[derive(Serialize)]
    struct Doc<'a> {
        cost: f64,
        w2: f64,
        dual_objective: f64,
        plan: &'a [Vec<f64>],
        phi: &'a [f64],
        phistar: &'a [f64],
        anchor: usize,
    }
    let mu: DiscreteMeasure = load(&cfg.mu, "mu")?;
    let nu: DiscreteMeasure = load(&cfg.nu, "nu")?;
    let r = w2(&mu, &nu)?;
    let doc = Doc {
        cost: r.cost,
        w2: r.w2(),
        dual_objective: r.dual_objective(&mu, &nu),
        plan: &r.plan,
        phi: &r.phi,
        phistar: &r.phistar,
        anchor: r.anchor,
    };
    let csv = if want_csv {
        use std::fmt::Write as _;
        let mut body = String::from("i,j,mass\n");
        for (i, row) in r.plan.iter().enumerate() {
            for (j, m) in row.iter().enumerate().filter(|(_, m)| **m > 0.0) {
                let _ = writeln!(body, "{i},{j},{m}");
            }
        }
        Some(csv_document(cfg, &body)?)
    } else {
        None
    };
    let summary = vec![format!("W2^2: {}", r.cost), format!("W2: {}", r.w2())];
    Ok(Outcome { main: json_document(cfg, &doc)?, csv, summary, infeasible: None })
}

fn etilde(cfg: &RunConfig) -> CliResult<EtildePolytope> {
    let (game, target) = load_model(cfg)?;
    let signals = load_signals(cfg, &game)?;
    Ok(build_etilde(&game, &target, &grid_actions(game.rows(), cfg.actions), &signals)?)
}

fn cmd_pm(cfg: &RunConfig) -> CliResult<Outcome> {
    #[derive(Serialize)]
    struct Doc<'a> {
        points: Vec<Vec<f64>>,
        etilde: &'a EtildePolytope,
    }
    let et = etilde(cfg)?;
    let summary = vec![
        format!("grid points: {} ({} actions x {} signals)", et.len(), et.actions.len(), et.signals.len()),
        format!("constraints: {}", et.rows.len()),
        format!("empty: {}", et.empty),
    ];
    let infeasible = et.empty.then(|| "no measure on the grid is compatible with the target".to_string());
    Ok(Outcome { main: json_document(cfg, &Doc { points: et.points(), etilde: &et })?, csv: None, summary, infeasible })
}

fn cmd_wsim(cfg: &RunConfig) -> CliResult<Outcome> {
    let et = etilde(cfg)?;
    let nx = et.actions.len();
    let nz = et.signals.len();
    let spec = cfg.strategy.as_deref().unwrap_or("greedy");
    let strategy = match spec.split_once(':') {
        None if spec == "greedy" => WStrategy::Greedy,
        Some(("fixed", w)) => WStrategy::Fixed(check_len(parse_weights(w, "strategy")?, nx, "strategy")?),
        _ => return Err(CliError::Config(format!("strategy: unknown spec {spec:?}"))),
    };
    let spec = cfg.adversary.as_deref().unwrap_or("best_response");
    let adv = match spec.split_once(':') {
        None if spec == "best_response" => WAdversary::BestResponse,
        None if spec == "potential_maximin" => WAdversary::PotentialMaximin,
        None if spec == "random" => WAdversary::RandomSeeded(0),
        Some(("random", k)) => {
            WAdversary::RandomSeeded(k.parse().map_err(|e| CliError::Config(format!("adversary: bad seed {k:?}: {e}")))?)
        }
        Some(("stationary", w)) => WAdversary::Stationary(check_len(parse_weights(w, "adversary")?, nz, "adversary")?),
        _ => return Err(CliError::Config(format!("adversary: unknown spec {spec:?}"))),
    };
    let wcfg = WSimConfig { n: cfg.n[0], delta: cfg.delta, seed: cfg.seed, smooth_both: true, dump_stride: 0 };
    let tr = run_wsim(&et, &strategy, &adv, &wcfg)?;
    let last = tr.stages.last().expect("n >= 1");
    let summary = vec![format!("adversary: {}", adv.name()), format!("final W2: {}", last.w2)];
    Ok(Outcome { main: csv_document(cfg, &tr.to_csv())?, summary, ..Outcome::default() })
}

fn check_len(w: Vec<f64>, n: usize, what: &str) -> CliResult<Vec<f64>> {
    if w.len() != n {
        return Err(CliError::Config(format!("{what}: {} weights for {n} grid points", w.len())));
    }
    Ok(w)
}

pub fn execute(cfg: &RunConfig, want_csv: bool) -> CliResult<Outcome> {
    match cfg.command {
        Command::Value => cmd_value(cfg, want_csv),
        Command::Classify => cmd_classify(cfg),
        Command::Synthesize => cmd_synthesize(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Scan => cmd_scan(cfg),
        Command::Ot => cmd_ot(cfg, want_csv),
        Command::Pm => cmd_pm(cfg),
        Command::Wsim => cmd_wsim(cfg),
    }
}
