//! Deterministic n-stage repeated game with mixed-action payoffs.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{MixedAction, TargetSet, VectorGame};
use crate::hjb::{solve_value, Order, SchemeConfig};
use crate::par::{map_indices, Exec};
use crate::synth::{build_nadc_for, to_repeated, InducedStrategy, NadcStrategy, Role};

/// Player 1 strategy for one run.
#[derive(Debug, Clone)]
pub enum RepeatedStrategy {
    Stationary(MixedAction),
    /// Cycles through the sequence.
    Fixed(Vec<MixedAction>),
    Induced(Box<InducedStrategy>),
}

impl RepeatedStrategy {
    pub fn induced(strat: Arc<NadcStrategy>, n: usize) -> Self {
        RepeatedStrategy::Induced(Box::new(to_repeated(strat, n)))
    }

    fn act(&mut self, opp: &[MixedAction]) -> Result<MixedAction> {
        let m = opp.len();
        match self {
            RepeatedStrategy::Stationary(x) => Ok(x.clone()),
            RepeatedStrategy::Fixed(seq) => Ok(seq[m % seq.len()].clone()),
            RepeatedStrategy::Induced(s) => s.act(opp),
        }
    }
}

/// Player 2 behaviour. `BestResponse` plays the repeated-game strategy induced
/// by a maximizing delayed strategy for the run's horizon.
#[derive(Debug, Clone)]
pub enum Adversary {
    Fixed(Vec<MixedAction>),
    Stationary(MixedAction),
    BestResponse(Arc<NadcStrategy>),
    /// Uniformly random pure action from a seeded stream.
    RandomSeeded(u64),
}

impl Adversary {
    pub fn name(&self) -> String {
        match self {
            Adversary::Fixed(_) => "fixed".into(),
            Adversary::Stationary(y) => {
                let w: Vec<String> = y.weights().iter().map(|v| v.to_string()).collect();
                format!("stationary_{}", w.join("_"))
            }
            Adversary::BestResponse(_) => "best_response".into(),
            Adversary::RandomSeeded(s) => format!("random_{s}"),
        }
    }
}

enum AdversaryState {
    Fixed(Vec<MixedAction>),
    Stationary(MixedAction),
    Induced(Box<InducedStrategy>),
    Random(ChaCha8Rng, usize),
}

impl AdversaryState {
    fn new(adv: &Adversary, game: &VectorGame, n: usize, seed: u64) -> Result<Self> {
        Ok(match adv {
            Adversary::Fixed(seq) => {
                if seq.is_empty() {
                    return Err(invalid("fixed adversary needs at least one action"));
                }
                AdversaryState::Fixed(seq.clone())
            }
            Adversary::Stationary(y) => AdversaryState::Stationary(y.clone()),
            Adversary::BestResponse(s) => {
                if s.role() != Role::Maximizer {
                    return Err(invalid("best-response adversary must be a maximizing strategy"));
                }
                AdversaryState::Induced(Box::new(to_repeated(s.clone(), n)))
            }
            Adversary::RandomSeeded(s) => {
                AdversaryState::Random(ChaCha8Rng::seed_from_u64(s.wrapping_add(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))), game.cols())
            }
        })
    }

    fn act(&mut self, own: &[MixedAction]) -> Result<MixedAction> {
        match self {
            AdversaryState::Fixed(seq) => Ok(seq[own.len() % seq.len()].clone()),
            AdversaryState::Stationary(y) => Ok(y.clone()),
            AdversaryState::Induced(s) => s.act(own),
            AdversaryState::Random(rng, b) => Ok(MixedAction::pure(*b, rng.gen_range(0..*b))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub m: usize,
    pub x: MixedAction,
    pub y: MixedAction,
    pub g: Vec<f64>,
    pub gbar: Vec<f64>,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon: usize,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
}

impl Trajectory {
    pub fn final_average(&self) -> &[f64] {
        &self.stages.last().expect("non-empty trajectory").gbar
    }

    pub fn final_distance(&self) -> f64 {
        self.stages.last().expect("non-empty trajectory").dist
    }

    /// Columns `m, x0.., y0.., g0.., gbar0.., dist`.
    pub fn to_csv(&self) -> String {
        let first = &self.stages[0];
        let (a, b, d) = (first.x.len(), first.y.len(), first.g.len());
        let mut out = String::from("m");
        for (p, n) in [("x", a), ("y", b), ("g", d), ("gbar", d)] {
            for i in 0..n {
                let _ = write!(out, ",{p}{i}");
            }
        }
        out.push_str(",dist\n");
        for r in &self.stages {
            let _ = write!(out, "{}", r.m);
            for v in r.x.weights().iter().chain(r.y.weights()).chain(&r.g).chain(&r.gbar) {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", r.dist);
        }
        out
    }
}

/// Plays `n` stages.
pub fn run(
    game: &VectorGame,
    target: &TargetSet,
    player: &RepeatedStrategy,
    adversary: &Adversary,
    n: usize,
    seed: u64,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(invalid("n: horizon must be at least 1"));
    }
    let mut p1 = player.clone();
    let mut p2 = AdversaryState::new(adversary, game, n, seed)?;
    let mut xs: Vec<MixedAction> = Vec::with_capacity(n);
    let mut ys: Vec<MixedAction> = Vec::with_capacity(n);
    let mut gbar = vec![0.0; game.dim()];
    let mut stages = Vec::with_capacity(n);
    for m in 1..=n {
        let x = p1.act(&ys)?;
        let y = p2.act(&xs)?;
        let g = game.payoff(&x, &y)?;
        for (b, gi) in gbar.iter_mut().zip(&g) {
            *b += (gi - *b) / m as f64;
        }
        let dist = target.distance(&gbar);
        xs.push(x.clone());
        ys.push(y.clone());
        stages.push(StageRecord { m, x, y, g, gbar: gbar.clone(), dist });
    }
    Ok(Trajectory { horizon: n, seed, stages })
}

/// Player 2 delayed strategy from the lower-value grid of the same game.
pub fn best_response_adversary(
    game: &VectorGame,
    target: &TargetSet,
    cfg: &SchemeConfig,
    delay: usize,
) -> Result<Adversary> {
    let vg = solve_value(game, target, &cfg.with_order(Order::MaxMin))?;
    Ok(Adversary::BestResponse(Arc::new(build_nadc_for(Arc::new(vg), delay, Role::Maximizer)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub max_dist: f64,
    pub argmax_adversary: String,
}

/// Worst final distance over the adversary suite, per horizon. Ties go to
/// the first adversary in the suite.
pub fn convergence_scan(
    game: &VectorGame,
    target: &TargetSet,
    player: &Arc<NadcStrategy>,
    suite: &[Adversary],
    horizons: &[usize],
    seed: u64,
    exec: Exec,
) -> Result<Vec<ScanRow>> {
    if suite.is_empty() {
        return Err(invalid("adversary suite is empty"));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n: horizons must be increasing"));
    }
    let na = suite.len();
    let finals: Vec<Result<f64>> = map_indices(exec, horizons.len() * na, |c| {
        let (h, a) = (c / na, c % na);
        let n = horizons[h];
        let p = RepeatedStrategy::induced(player.clone(), n);
        run(game, target, &p, &suite[a], n, seed).map(|t| t.final_distance())
    });
    let finals = finals.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(h, &n)| {
            let row = &finals[h * na..(h + 1) * na];
            let mut best = 0;
            for (a, d) in row.iter().enumerate() {
                if *d > row[best] {
                    best = a;
                }
            }
            ScanRow { n, max_dist: row[best], argmax_adversary: suite[best].name() }
        })
        .collect())
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("n,max_dist,argmax_adversary\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.max_dist, r.argmax_adversary);
    }
    out
}
