//! Backward semi-Lagrangian scheme for the value of the averaging game
//!
//! ```text
//! g'(s) = (x(s) A y(s) - g(s)) / s,   s in [s0, 1],   payoff d(g(1), E)
//! ```
//!
//! The value is sampled on a uniform time grid `s0 = s_0 < ... < s_K = 1` and
//! on an axis-aligned box of payoff states. One backward step holds both
//! actions constant over `[s_k, s_{k+1}]`, which moves the state exactly to
//! `g + (ds / s_{k+1}) (xAy - g)`, a convex combination of `g` and a payoff
//! vector, so the update never leaves the box. The next slice is read through
//! multilinear interpolation and the inner minimax is taken over regular
//! simplex grids of mixed actions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{TargetSet, VectorGame};
use crate::linalg::dot;
use crate::lp::matrix_game_value;
use crate::par::{map_indices, Exec};
use crate::simplex_grid::{simplex_grid, vertices_first};

/// Which player optimizes first in the inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `min_x max_y`: upper value.
    MinMax,
    /// `max_y min_x`: lower value.
    MaxMin,
}

impl std::str::FromStr for Order {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min_max" | "upper" => Ok(Order::MinMax),
            "maxmin" | "max_min" | "lower" => Ok(Order::MaxMin),
            other => Err(invalid(format!("order: unknown value {other:?} (expected minmax or maxmin)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub s0: f64,
    /// Number of time steps `K`.
    pub steps: usize,
    /// Nodes per payoff dimension; a single entry is used for every dimension.
    pub nodes: Vec<usize>,
    pub action_resolution: usize,
    pub order: Order,
    /// Optional explicit state box `(lower, upper)`; it must contain every
    /// payoff entry. Defaults to the payoff bounding box, widened by one unit
    /// on each side along degenerate axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    #[serde(default, skip_serializing)]
    pub exec: Exec,
}

impl SchemeConfig {
    pub fn new(s0: f64, steps: usize, nodes: usize, action_resolution: usize, order: Order) -> Self {
        SchemeConfig { s0, steps, nodes: vec![nodes], action_resolution, order, bounds: None, exec: Exec::default() }
    }

    pub fn with_order(&self, order: Order) -> Self {
        SchemeConfig { order, ..self.clone() }
    }

    pub fn time_step(&self) -> f64 {
        (1.0 - self.s0) / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0 < 1.0) {
            return Err(invalid(format!("s0: must lie in (0, 1), got {}", self.s0)));
        }
        if self.steps == 0 {
            return Err(invalid("sgrid: at least one time step is required"));
        }
        if self.time_step() > self.s0 * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "sgrid: time step {} exceeds s0 = {}; use at least {} steps",
                self.time_step(),
                self.s0,
                ((1.0 - self.s0) / self.s0).ceil()
            )));
        }
        if self.nodes.is_empty() || self.nodes.iter().any(|&n| n < 2) {
            return Err(invalid("ggrid: every dimension needs at least 2 nodes"));
        }
        if self.action_resolution < 2 {
            return Err(invalid("actions: resolution must be at least 2"));
        }
        Ok(())
    }
}

/// Uniform tensor grid on a box. Dimension 0 varies fastest in the flat index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl GridBox {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.upper[k] - self.lower[k]) / (self.nodes[k] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn coords(&self, mut idx: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let i = idx % self.nodes[k];
            idx /= self.nodes[k];
            let t = i as f64 / (self.nodes[k] - 1) as f64;
            out.push(if i + 1 == self.nodes[k] { self.upper[k] } else { self.lower[k] + t * (self.upper[k] - self.lower[k]) });
        }
        out
    }

    pub fn contains(&self, g: &[f64], tol: f64) -> bool {
        g.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Multilinear interpolation of node values; points are clamped to the box.
    #[inline]
    pub fn interp(&self, values: &[f64], g: &[f64]) -> f64 {
        if self.nodes.len() == 1 {
            return self.interp1(values, g[0]);
        }
        let d = self.dim();
        let mut base = 0usize;
        let mut stride = 1usize;
        let mut fracs = [0.0f64; 8];
        let mut strides = [0usize; 8];
        assert!(d <= 8, "interpolation supports at most 8 dimensions");
        for k in 0..d {
            let n = self.nodes[k];
            let t = ((g[k] - self.lower[k]) / (self.upper[k] - self.lower[k]) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            fracs[k] = t - i as f64;
            strides[k] = stride;
            base += i * stride;
            stride *= n;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    w *= fracs[k];
                    idx += strides[k];
                } else {
                    w *= 1.0 - fracs[k];
                }
            }
            if w != 0.0 {
                acc += w * values[idx];
            }
        }
        acc
    }

    #[inline]
    fn interp1(&self, values: &[f64], g: f64) -> f64 {
        let n = self.nodes[0];
        let t = ((g - self.lower[0]) / (self.upper[0] - self.lower[0]) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        if f == 0.0 {
            values[i]
        } else {
            (1.0 - f) * values[i] + f * values[i + 1]
        }
    }
}

/// Value function sampled on the time x state grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub config: SchemeConfig,
    pub game: VectorGame,
    pub target: TargetSet,
    pub grid: GridBox,
    pub times: Vec<f64>,
    /// `values[k][node]` approximates `V(times[k], node)`.
    pub values: Vec<Vec<f64>>,
    pub kappa: f64,
}

/// Precomputed action grids and payoff table shared by all nodes.
pub(crate) struct Kernel {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub x_order: Vec<usize>,
    pub y_order: Vec<usize>,
    /// `payoff[(ix * ny + iy) * d ..]`
    pub payoff: Vec<f64>,
    pub d: usize,
}

impl Kernel {
    pub fn new(game: &VectorGame, resolution: usize) -> Self {
        let xs = simplex_grid(game.rows(), resolution);
        let ys = simplex_grid(game.cols(), resolution);
        let d = game.dim();
        let mut payoff = vec![0.0; xs.len() * ys.len() * d];
        for (ix, x) in xs.iter().enumerate() {
            for (iy, y) in ys.iter().enumerate() {
                let k = (ix * ys.len() + iy) * d;
                game.payoff_into(x, y, &mut payoff[k..k + d]);
            }
        }
        let x_order = vertices_first(&xs);
        let y_order = vertices_first(&ys);
        Kernel { xs, ys, x_order, y_order, payoff, d }
    }

    #[inline]
    pub fn entry(&self, ix: usize, iy: usize) -> &[f64] {
        let k = (ix * self.ys.len() + iy) * self.d;
        &self.payoff[k..k + self.d]
    }

    /// Value of the grid game `opt_x opt_y f(ix, iy)` in the given order.
    /// The hint (an outer index) is evaluated first to tighten pruning; the
    /// returned value does not depend on it.
    #[inline]
    pub fn minimax<F: Fn(usize, usize) -> f64>(&self, order: Order, hint: usize, f: F) -> (f64, usize) {
        match order {
            Order::MinMax => {
                let mut best = f64::INFINITY;
                let mut arg = hint;
                for ix in std::iter::once(hint).chain(self.x_order.iter().copied().filter(|&i| i != hint)) {
                    let mut m = f64::NEG_INFINITY;
                    for &iy in &self.y_order {
                        let v = f(ix, iy);
                        if v > m {
                            m = v;
                            if m >= best {
                                break;
                            }
                        }
                    }
                    if m < best {
                        best = m;
                        arg = ix;
                    }
                }
                (best, arg)
            }
            Order::MaxMin => {
                let mut best = f64::NEG_INFINITY;
                let mut arg = hint;
                for iy in std::iter::once(hint).chain(self.y_order.iter().copied().filter(|&i| i != hint)) {
                    let mut m = f64::INFINITY;
                    for &ix in &self.x_order {
                        let v = f(ix, iy);
                        if v < m {
                            m = v;
                            if m <= best {
                                break;
                            }
                        }
                    }
                    if m > best {
                        best = m;
                        arg = iy;
                    }
                }
                (best, arg)
            }
        }
    }

    /// Lexicographically first `x` attaining `min_x max_y f`.
    pub fn lex_argmin_max<F: Fn(usize, usize) -> f64>(&self, f: F) -> (usize, f64) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for ix in 0..self.xs.len() {
            let mut m = f64::NEG_INFINITY;
            for &iy in &self.y_order {
                m = m.max(f(ix, iy));
                if m > best {
                    break;
                }
            }
            if m < best {
                best = m;
                arg = ix;
            }
        }
        (arg, best)
    }

    /// Lexicographically first `y` attaining `max_y min_x f`.
    pub fn lex_argmax_min<F: Fn(usize, usize) -> f64>(&self, f: F) -> (usize, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for iy in 0..self.ys.len() {
            let mut m = f64::INFINITY;
            for &ix in &self.x_order {
                m = m.min(f(ix, iy));
                if m < best {
                    break;
                }
            }
            if m > best {
                best = m;
                arg = iy;
            }
        }
        (arg, best)
    }
}

fn state_box(game: &VectorGame, cfg: &SchemeConfig) -> Result<GridBox> {
    let d = game.dim();
    let nodes = match cfg.nodes.len() {
        1 => vec![cfg.nodes[0]; d],
        n if n == d => cfg.nodes.clone(),
        n => return Err(invalid(format!("ggrid: {n} node counts for payoff dimension {d}"))),
    };
    let (plo, phi) = game.payoff_box();
    let (lower, upper) = match &cfg.bounds {
        Some((lo, hi)) => {
            if lo.len() != d || hi.len() != d {
                return Err(invalid("bounds: box dimension does not match the payoff dimension"));
            }
            for k in 0..d {
                if !(lo[k] <= plo[k] + 1e-12 && hi[k] >= phi[k] - 1e-12) {
                    return Err(invalid(format!(
                        "bounds: box [{}, {}] on axis {k} does not contain the payoffs [{}, {}]",
                        lo[k], hi[k], plo[k], phi[k]
                    )));
                }
                if hi[k] - lo[k] <= 0.0 {
                    return Err(invalid("bounds: box has zero width"));
                }
            }
            (lo.clone(), hi.clone())
        }
        None => {
            let mut lo = plo.clone();
            let mut hi = phi.clone();
            for k in 0..d {
                if hi[k] - lo[k] < 1e-12 {
                    lo[k] -= 1.0;
                    hi[k] += 1.0;
                }
            }
            (lo, hi)
        }
    };
    Ok(GridBox { lower, upper, nodes })
}

/// Runs the backward sweep.
pub fn solve_value(game: &VectorGame, target: &TargetSet, cfg: &SchemeConfig) -> Result<ValueGrid> {
    cfg.validate()?;
    target.validate()?;
    if target.dim() != game.dim() {
        return Err(invalid("target dimension does not match the payoff dimension"));
    }
    let grid = state_box(game, cfg)?;
    let kernel = Kernel::new(game, cfg.action_resolution);
    let k_steps = cfg.steps;
    let ds = cfg.time_step();
    let mut times: Vec<f64> = (0..=k_steps).map(|k| cfg.s0 + k as f64 * ds).collect();
    times[k_steps] = 1.0;

    let n_nodes = grid.len();
    let nodes: Vec<Vec<f64>> = (0..n_nodes).map(|i| grid.coords(i)).collect();
    let terminal: Vec<f64> = nodes.iter().map(|g| target.distance(g)).collect();

    let mut values = vec![Vec::new(); k_steps + 1];
    values[k_steps] = terminal;
    let mut hints = vec![0usize; n_nodes];
    for k in (0..k_steps).rev() {
        let eps = (times[k + 1] - times[k]) / times[k + 1];
        let next = &values[k + 1];
        let out: Vec<(f64, usize)> = map_indices(cfg.exec, n_nodes, |i| {
            node_update(&kernel, &grid, next, &nodes[i], eps, cfg.order, hints[i])
        });
        values[k] = out.iter().map(|o| o.0).collect();
        hints = out.iter().map(|o| o.1).collect();
    }
    Ok(ValueGrid {
        config: cfg.clone(),
        game: game.clone(),
        target: target.clone(),
        grid,
        times,
        values,
        kappa: game.kappa(),
    })
}

#[inline]
fn node_update(
    kernel: &Kernel,
    grid: &GridBox,
    next: &[f64],
    g: &[f64],
    eps: f64,
    order: Order,
    hint: usize,
) -> (f64, usize) {
    if kernel.d == 1 {
        let base = (1.0 - eps) * g[0];
        return kernel.minimax(order, hint, |ix, iy| grid.interp1(next, base + eps * kernel.entry(ix, iy)[0]));
    }
    let mut buf = vec![0.0; kernel.d];
    let buf = std::cell::RefCell::new(&mut buf);
    kernel.minimax(order, hint, |ix, iy| {
        let mut b = buf.borrow_mut();
        for ((o, gk), pk) in b.iter_mut().zip(g).zip(kernel.entry(ix, iy)) {
            *o = gk + eps * (pk - gk);
        }
        grid.interp(next, &b)
    })
}

impl ValueGrid {
    pub fn s0(&self) -> f64 {
        self.times[0]
    }

    pub fn time_step(&self) -> f64 {
        self.config.time_step()
    }

    pub fn order(&self) -> Order {
        self.config.order
    }

    /// `2 (dg + ds)` with `dg` the largest node spacing.
    pub fn scheme_slack(&self) -> f64 {
        2.0 * (self.grid.max_spacing() + self.time_step())
    }

    pub(crate) fn kernel(&self) -> Kernel {
        Kernel::new(&self.game, self.config.action_resolution)
    }

    /// Interpolated value on slice `k`.
    pub fn slice_value(&self, k: usize, g: &[f64]) -> f64 {
        self.grid.interp(&self.values[k], g)
    }

    /// Value at an arbitrary time in `[s0, 1]`, linear in time between slices.
    pub fn value_at(&self, s: f64, g: &[f64]) -> f64 {
        let s = s.clamp(self.s0(), 1.0);
        let ds = self.time_step();
        let last = self.times.len() - 1;
        let k = (((s - self.s0()) / ds).floor() as usize).min(last);
        if k == last || s == self.times[k] {
            return self.slice_value(k, g);
        }
        let w = (s - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (1.0 - w) * self.slice_value(k, g) + w * self.slice_value(k + 1, g)
    }

    /// Recomputes node `node` of slice `k < K` from slice `k + 1` with the
    /// same arithmetic as the sweep.
    pub fn recompute_node(&self, k: usize, node: usize) -> f64 {
        let kernel = self.kernel();
        let eps = (self.times[k + 1] - self.times[k]) / self.times[k + 1];
        let g = self.grid.coords(node);
        node_update(&kernel, &self.grid, &self.values[k + 1], &g, eps, self.order(), 0).0
    }

    pub fn node_count(&self) -> usize {
        self.grid.len()
    }
}

/// `H(s, g, p) = (val(M_p) - p . g) / s` with `M_p[i][j] = p . A[i][j]`, the
/// matrix game solved exactly by linear programming.
pub fn hamiltonian(game: &VectorGame, s: f64, g: &[f64], p: &[f64]) -> Result<f64> {
    Ok(hamiltonian_bracket(game, s, g, p)?.0)
}

/// Upper (`inf_x sup_y`) and lower (`sup_y inf_x`) Hamiltonians.
pub fn hamiltonian_bracket(game: &VectorGame, s: f64, g: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("hamiltonian needs s > 0, got {s}")));
    }
    if g.len() != game.dim() {
        return Err(invalid("state dimension does not match the payoff dimension"));
    }
    let m = game.scalarize(p)?;
    let sol = matrix_game_value(&m)?;
    let pg = dot(p, g);
    Ok(((sol.value - pg) / s, (sol.lower_value - pg) / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroValue {
    pub estimate: f64,
    pub bound: f64,
    pub spread: f64,
    pub slack: f64,
}

/// Estimate of `V(0)` from the first slice. The value at time zero does not
/// depend on the state and the value is `2 kappa`-Lipschitz in time, so
/// `estimate +- bound` brackets it up to scheme convergence.
pub fn value_at_zero(vg: &ValueGrid) -> ZeroValue {
    let first = &vg.values[0];
    let n = first.len() as f64;
    let estimate = first.iter().sum::<f64>() / n;
    let lo = first.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let slack = vg.scheme_slack();
    ZeroValue { estimate, bound: 2.0 * vg.kappa * vg.s0() + spread + slack, spread, slack }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WeaklyApproachable,
    WeaklyExcludable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::WeaklyApproachable => "weakly approachable",
            Verdict::WeaklyExcludable => "weakly excludable",
            Verdict::Inconclusive => "inconclusive - refine",
        })
    }
}

pub const DEFAULT_VERDICT_TOL: f64 = 0.1;

pub fn classify(z: &ZeroValue, tol: f64) -> Verdict {
    if z.estimate + z.bound <= tol {
        Verdict::WeaklyApproachable
    } else if z.estimate - z.bound >= tol {
        Verdict::WeaklyExcludable
    } else {
        Verdict::Inconclusive
    }
}

/// Largest node-wise difference between the upper and lower scheme values.
pub fn isaacs_gap(game: &VectorGame, target: &TargetSet, cfg: &SchemeConfig) -> Result<f64> {
    let upper = solve_value(game, target, &cfg.with_order(Order::MinMax))?;
    let lower = solve_value(game, target, &cfg.with_order(Order::MaxMin))?;
    Ok(upper
        .values
        .iter()
        .flatten()
        .zip(lower.values.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
