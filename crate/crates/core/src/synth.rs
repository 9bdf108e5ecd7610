//! Strategies built from a value grid.
//!
//! A delayed piecewise-constant strategy with delay `1/N` plays a fixed `x0`
//! until the first boundary `m*/N >= s0`, then at every boundary `j/N`
//! replays the observed opponent control against its own past play to get the
//! current state and commits to the grid feedback action for `[j/N, (j+1)/N)`.
//! The same replay engine drives the induced repeated-game strategy, so stage
//! averages and continuous endpoints are finite sums of the same terms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::game::{MixedAction, VectorGame};
use crate::hjb::{Kernel, ValueGrid};

/// Breakpoints closer than this are the same time.
pub const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Player 1, picks `x` to minimize.
    Minimizer,
    /// Player 2, picks `y` to maximize.
    Maximizer,
}

/// Piecewise-constant control: `values[i]` on `[breakpoints[i], breakpoints[i+1])`,
/// the last value also at the right end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantControl {
    breakpoints: Vec<f64>,
    values: Vec<MixedAction>,
}

impl PiecewiseConstantControl {
    pub fn new(breakpoints: Vec<f64>, values: Vec<MixedAction>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(invalid("control needs one more breakpoint than values"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("control breakpoints must be strictly increasing"));
        }
        let n = values[0].len();
        if values.iter().any(|v| v.len() != n) {
            return Err(dim("control values of different sizes"));
        }
        Ok(PiecewiseConstantControl { breakpoints, values })
    }

    /// Constant control on `[start, end]`.
    pub fn constant(start: f64, end: f64, value: MixedAction) -> Result<Self> {
        Self::new(vec![start, end], vec![value])
    }

    /// Control of a stage sequence: value `i` on `[start + i h, start + (i+1) h)`.
    pub fn from_stages(start: f64, step: f64, values: Vec<MixedAction>) -> Result<Self> {
        let bps = (0..=values.len()).map(|i| start + i as f64 * step).collect();
        Self::new(bps, values)
    }

    pub(crate) fn empty_at(start: f64) -> Self {
        PiecewiseConstantControl { breakpoints: vec![start], values: Vec::new() }
    }

    pub(crate) fn push(&mut self, end: f64, value: MixedAction) {
        debug_assert!(end > *self.breakpoints.last().unwrap());
        self.breakpoints.push(end);
        self.values.push(value);
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[MixedAction] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn value_at(&self, t: f64) -> &MixedAction {
        let i = self.breakpoints.partition_point(|&b| b <= t + SNAP).saturating_sub(1);
        &self.values[i.min(self.values.len() - 1)]
    }

    /// Same control restricted to `[start, t]`.
    pub fn truncated(&self, t: f64) -> Result<Self> {
        if t <= self.start() + SNAP || t > self.end() + SNAP {
            return Err(Error::Domain(format!("truncation time {t} outside the control range")));
        }
        let mut out = Self::empty_at(self.start());
        for (i, v) in self.values.iter().enumerate() {
            let hi = self.breakpoints[i + 1].min(t);
            if hi > out.end() + SNAP {
                out.push(hi, v.clone());
            }
            if self.breakpoints[i + 1] >= t - SNAP {
                break;
            }
        }
        Ok(out)
    }
}

/// `acc += int_a^b payoff(own, opp(t)) dt` with `own` fixed on `[a, b]`.
/// Pieces shorter than [`SNAP`] are skipped.
pub(crate) fn accumulate(
    game: &VectorGame,
    role: Role,
    acc: &mut [f64],
    a: f64,
    b: f64,
    own: &MixedAction,
    opp: &PiecewiseConstantControl,
) -> Result<()> {
    if b - a <= SNAP {
        return Ok(());
    }
    if opp.start() > a + SNAP || opp.end() < b - SNAP {
        return Err(Error::Domain(format!(
            "opponent control on [{}, {}] does not cover [{a}, {b}]",
            opp.start(),
            opp.end()
        )));
    }
    let bps = &opp.breakpoints;
    let mut i = bps.partition_point(|&t| t <= a + SNAP).saturating_sub(1);
    let mut buf = vec![0.0; game.dim()];
    while i < opp.values.len() && bps[i] < b - SNAP {
        let lo = bps[i].max(a);
        let hi = bps[i + 1].min(b);
        if hi - lo > SNAP {
            let v = opp.values[i].weights();
            match role {
                Role::Minimizer => game.payoff_into(own.weights(), v, &mut buf),
                Role::Maximizer => game.payoff_into(v, own.weights(), &mut buf),
            }
            for (o, p) in acc.iter_mut().zip(&buf) {
                *o += (hi - lo) * p;
            }
        }
        i += 1;
    }
    Ok(())
}

/// `V(s', .)` at `s' = min(s + ds, 1)`, linear in time between slices.
fn next_values(vg: &ValueGrid, s: f64) -> (f64, std::borrow::Cow<'_, [f64]>) {
    let ds = vg.time_step();
    let last = vg.times.len() - 1;
    let target = s + ds;
    if target >= 1.0 - SNAP {
        return (1.0, std::borrow::Cow::Borrowed(&vg.values[last]));
    }
    let k = (((target - vg.s0()) / ds).floor() as usize).min(last - 1);
    for kk in [k, k + 1] {
        if (vg.times[kk] - target).abs() <= SNAP {
            return (vg.times[kk], std::borrow::Cow::Borrowed(&vg.values[kk]));
        }
    }
    let w = (target - vg.times[k]) / (vg.times[k + 1] - vg.times[k]);
    let blended = vg.values[k].iter().zip(&vg.values[k + 1]).map(|(a, b)| (1.0 - w) * a + w * b).collect();
    (target, std::borrow::Cow::Owned(blended))
}

/// Grid feedback with a cached action table.
pub struct Feedback {
    vg: Arc<ValueGrid>,
    kernel: Kernel,
}

impl Feedback {
    pub fn new(vg: Arc<ValueGrid>) -> Self {
        let kernel = vg.kernel();
        Feedback { vg, kernel }
    }

    pub fn value_grid(&self) -> &Arc<ValueGrid> {
        &self.vg
    }

    fn check(&self, s: f64, g: &[f64]) -> Result<()> {
        if !(s >= self.vg.s0() - SNAP && s < 1.0) {
            return Err(Error::Domain(format!("feedback time {s} outside [s0, 1)")));
        }
        if g.len() != self.vg.game.dim() {
            return Err(dim("state dimension does not match the payoff dimension"));
        }
        if !self.vg.grid.contains(g, 1e-9) {
            return Err(Error::Domain(format!("state {g:?} outside the grid box")));
        }
        Ok(())
    }

    /// Index of the chosen action on the role's action grid and the attained
    /// one-step value.
    pub fn choose(&self, role: Role, s: f64, g: &[f64]) -> Result<(usize, f64)> {
        self.check(s, g)?;
        let s = s.max(self.vg.s0());
        let (s1, next) = next_values(&self.vg, s);
        let eps = (s1 - s) / s1;
        let grid = &self.vg.grid;
        let k = &self.kernel;
        let mut buf = vec![0.0; g.len()];
        let cell = std::cell::RefCell::new(&mut buf);
        let f = |ix: usize, iy: usize| {
            let mut b = cell.borrow_mut();
            for ((o, gk), pk) in b.iter_mut().zip(g).zip(k.entry(ix, iy)) {
                *o = gk + eps * (pk - gk);
            }
            grid.interp(&next, &b)
        };
        Ok(match role {
            Role::Minimizer => k.lex_argmin_max(f),
            Role::Maximizer => k.lex_argmax_min(f),
        })
    }

    pub fn action(&self, role: Role, s: f64, g: &[f64]) -> Result<MixedAction> {
        let (i, _) = self.choose(role, s, g)?;
        let grid = match role {
            Role::Minimizer => &self.kernel.xs,
            Role::Maximizer => &self.kernel.ys,
        };
        Ok(MixedAction::from_weights_unchecked(grid[i].clone()))
    }

    /// Grid optimum of the one-step problem in the role's order, computed by
    /// the pruned search of the backward sweep.
    pub fn one_step_value(&self, role: Role, s: f64, g: &[f64]) -> Result<f64> {
        self.check(s, g)?;
        let s = s.max(self.vg.s0());
        let (s1, next) = next_values(&self.vg, s);
        let eps = (s1 - s) / s1;
        let order = match role {
            Role::Minimizer => crate::hjb::Order::MinMax,
            Role::Maximizer => crate::hjb::Order::MaxMin,
        };
        let grid = &self.vg.grid;
        let k = &self.kernel;
        Ok(k.minimax(order, 0, |ix, iy| {
            let p: Vec<f64> = g.iter().zip(k.entry(ix, iy)).map(|(gk, pk)| gk + eps * (pk - gk)).collect();
            grid.interp(&next, &p)
        })
        .0)
    }
}

/// Lexicographically first grid action of player 1 attaining the one-step
/// grid minimax at `(s, g)`.
pub fn feedback_action(vg: &ValueGrid, s: f64, g: &[f64]) -> Result<MixedAction> {
    Feedback::new(Arc::new(vg.clone())).action(Role::Minimizer, s, g)
}

/// `m* = ceil(s0 N)`, with products within `1e-9` of an integer rounded.
pub fn first_boundary(s0: f64, n: usize) -> usize {
    let t = s0 * n as f64;
    if (t - t.round()).abs() <= 1e-9 {
        t.round() as usize
    } else {
        t.ceil() as usize
    }
}

/// Reconstructible description of a [`NadcStrategy`] given its value grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadcDescriptor {
    pub delay: usize,
    pub s0: f64,
    pub g0: Vec<f64>,
    pub x0: MixedAction,
    pub role: Role,
}

pub struct NadcStrategy {
    feedback: Feedback,
    delay: usize,
    first: usize,
    s0: f64,
    g0: Vec<f64>,
    x0: MixedAction,
    role: Role,
    cache: Mutex<HashMap<(usize, Vec<u64>), MixedAction>>,
}

impl std::fmt::Debug for NadcStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NadcStrategy").field("descriptor", &self.descriptor()).finish()
    }
}

/// Player 1 strategy with delay `1/N`, starting state the box centroid.
pub fn build_nadc(vg: Arc<ValueGrid>, n: usize) -> Result<NadcStrategy> {
    build_nadc_for(vg, n, Role::Minimizer)
}

pub fn build_nadc_for(vg: Arc<ValueGrid>, n: usize, role: Role) -> Result<NadcStrategy> {
    let g0 = vg.grid.centroid();
    build_nadc_at(vg, n, role, g0)
}

pub fn build_nadc_at(vg: Arc<ValueGrid>, n: usize, role: Role, g0: Vec<f64>) -> Result<NadcStrategy> {
    if n == 0 {
        return Err(invalid("N: delay denominator must be positive"));
    }
    if 1.0 / (n as f64) < vg.time_step() * (1.0 - 1e-12) {
        return Err(invalid(format!(
            "N: delay 1/{n} is shorter than the value grid time step {}",
            vg.time_step()
        )));
    }
    let s0 = vg.s0();
    let feedback = Feedback::new(vg);
    let x0 = feedback.action(role, s0, &g0)?;
    Ok(NadcStrategy {
        feedback,
        delay: n,
        first: first_boundary(s0, n),
        s0,
        g0,
        x0,
        role,
        cache: Mutex::new(HashMap::new()),
    })
}

/// Replay state of one run: the accumulated `s0 g0 + int own A opp` up to
/// the last processed boundary and the actions committed so far.
#[derive(Debug, Clone)]
pub struct Replay {
    acc: Vec<f64>,
    t: f64,
    actions: Vec<MixedAction>,
}

impl NadcStrategy {
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn first_boundary(&self) -> usize {
        self.first
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn x0(&self) -> &MixedAction {
        &self.x0
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn game(&self) -> &VectorGame {
        &self.feedback.vg.game
    }

    pub fn value_grid(&self) -> &Arc<ValueGrid> {
        &self.feedback.vg
    }

    pub fn descriptor(&self) -> NadcDescriptor {
        NadcDescriptor { delay: self.delay, s0: self.s0, g0: self.g0.clone(), x0: self.x0.clone(), role: self.role }
    }

    fn boundary(&self, j: usize) -> f64 {
        (j as f64 / self.delay as f64).max(self.s0)
    }

    /// Advertised breakpoints of every output control.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![self.s0];
        for j in self.first..self.delay {
            let t = j as f64 / self.delay as f64;
            if t > self.s0 + SNAP {
                out.push(t);
            }
        }
        out.push(1.0);
        out
    }

    pub fn start_replay(&self) -> Replay {
        Replay { acc: self.g0.iter().map(|g| self.s0 * g).collect(), t: self.s0, actions: Vec::new() }
    }

    /// Commits actions for all intervals up to `j`; `opp` must cover `[s0, j/N]`.
    pub fn extend(&self, r: &mut Replay, opp: &PiecewiseConstantControl, j: usize) -> Result<()> {
        while self.first + r.actions.len() <= j.min(self.delay - 1) {
            let jj = self.first + r.actions.len();
            let b = self.boundary(jj);
            let own = r.actions.last().unwrap_or(&self.x0).clone();
            accumulate(self.game(), self.role, &mut r.acc, r.t, b, &own, opp)?;
            r.t = r.t.max(b);
            let g: Vec<f64> = r.acc.iter().map(|a| a / b).collect();
            let a = self.cached_feedback(jj, b, &g)?;
            r.actions.push(a);
        }
        Ok(())
    }

    /// Action on interval `[j/N, (j+1)/N)`, or `x0` before the first boundary.
    pub fn action_on<'a>(&'a self, r: &'a Replay, j: usize) -> &'a MixedAction {
        if j < self.first {
            &self.x0
        } else {
            &r.actions[j - self.first]
        }
    }

    fn cached_feedback(&self, j: usize, s: f64, g: &[f64]) -> Result<MixedAction> {
        let key = (j, g.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        if let Some(a) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(a.clone());
        }
        let a = self.feedback.action(self.role, s, g)?;
        self.cache.lock().expect("cache lock").insert(key, a.clone());
        Ok(a)
    }

    /// Full response on `[s0, 1]` to an opponent control covering it.
    pub fn respond(&self, opp: &PiecewiseConstantControl) -> Result<PiecewiseConstantControl> {
        let mut r = self.start_replay();
        self.extend(&mut r, opp, self.delay - 1)?;
        let bps = self.breakpoints();
        let values = (0..bps.len() - 1)
            .map(|i| {
                let mid = 0.5 * (bps[i] + bps[i + 1]);
                let j = (mid * self.delay as f64).floor() as usize;
                self.action_on(&r, j).clone()
            })
            .collect();
        PiecewiseConstantControl::new(bps, values)
    }
}

/// State at time `t` of the averaged dynamics started at `(s0, g0)` under two
/// controls: `(s0 g0 + int_{s0}^t own A opp) / t`.
pub fn trajectory_state(
    game: &VectorGame,
    role: Role,
    s0: f64,
    g0: &[f64],
    own: &PiecewiseConstantControl,
    opp: &PiecewiseConstantControl,
    t: f64,
) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = g0.iter().map(|g| s0 * g).collect();
    for (i, v) in own.values().iter().enumerate() {
        let a = own.breakpoints()[i].max(s0);
        let b = own.breakpoints()[i + 1].min(t);
        if b > a {
            accumulate(game, role, &mut acc, a, b, v, opp)?;
        }
    }
    Ok(acc.iter().map(|a| a / t).collect())
}

/// Repeated-game strategy induced by a delayed strategy for horizon `n`.
/// With `k = n / N` stage `m` covers `[(m-1)/kN, m/kN)`; the first `k m*`
/// and the last `n - kN` stages play `x0`.
#[derive(Debug, Clone)]
pub struct InducedStrategy {
    strat: Arc<NadcStrategy>,
    horizon: usize,
    k: usize,
    arbitrary: bool,
    replay: Replay,
    opp: PiecewiseConstantControl,
    consumed: Vec<MixedAction>,
}

pub fn to_repeated(strat: Arc<NadcStrategy>, n: usize) -> InducedStrategy {
    let k = n / strat.delay;
    let replay = strat.start_replay();
    InducedStrategy {
        horizon: n,
        k,
        arbitrary: n < strat.delay,
        replay,
        opp: PiecewiseConstantControl::empty_at(0.0),
        consumed: Vec::new(),
        strat,
    }
}

impl InducedStrategy {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Set when `n < N`; the strategy then always plays `x0`.
    pub fn is_arbitrary(&self) -> bool {
        self.arbitrary
    }

    pub fn stages_per_interval(&self) -> usize {
        self.k
    }

    pub fn nadc(&self) -> &Arc<NadcStrategy> {
        &self.strat
    }

    fn stage_time(&self, m: usize) -> f64 {
        m as f64 / (self.k * self.strat.delay) as f64
    }

    /// Action at stage `opp_history.len() + 1`.
    pub fn act(&mut self, opp_history: &[MixedAction]) -> Result<MixedAction> {
        let m = opp_history.len() + 1;
        let n_big = self.strat.delay;
        if self.arbitrary || m <= self.k * self.strat.first || m > self.k * n_big {
            return Ok(self.strat.x0.clone());
        }
        if opp_history.len() < self.consumed.len() || opp_history[..self.consumed.len()] != self.consumed[..] {
            self.replay = self.strat.start_replay();
            self.opp = PiecewiseConstantControl::empty_at(0.0);
            self.consumed.clear();
        }
        let j = (m - 1) / self.k;
        let need = j * self.k;
        while self.consumed.len() < need {
            let i = self.consumed.len();
            let y = opp_history[i].clone();
            self.opp.push(self.stage_time(i + 1), y.clone());
            self.consumed.push(y);
        }
        self.strat.extend(&mut self.replay, &self.opp, j)?;
        Ok(self.strat.action_on(&self.replay, j).clone())
    }
}
