//! Partial monitoring: player 1 only sees the signal `S y` of the opponent's
//! mixed action, so the payoff of `x` given signal `mu` is the set
//! `p(x, mu) = {xAy : y in simplex, S y = mu}`.
//!
//! For a convex polytope `E = {g : u_k . g <= c_k}` the set of weights `q` on a
//! finite grid of (action, signal) pairs with `sum_i q_i p(x_i, mu_i)` inside
//! `E` is itself a polytope: Minkowski averages have additive support
//! functions, so inclusion reads `sum_i q_i h_{p_i}(u_k) <= h_E(u_k)` for all k.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::game::{MixedAction, TargetSet, VectorGame};
use crate::linalg::{combinations, dot, least_squares};
use crate::lp::{solve_lp, LpOutcome, LpProblem};
use crate::par::{map_indices, Exec};
use crate::transport::{project_to_measure_polytope, DiscreteMeasure};

pub const MEMBERSHIP_TOL: f64 = 1e-9;
const FIBER_TOL: f64 = 1e-10;

/// Column `j` of `S` is the signal emitted by pure action `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalFile", into = "SignalFile")]
pub struct SignalStructure {
    columns: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalFile {
    signals: Vec<Vec<f64>>,
}

impl TryFrom<SignalFile> for SignalStructure {
    type Error = Error;
    fn try_from(f: SignalFile) -> Result<Self> {
        SignalStructure::new(f.signals)
    }
}

impl From<SignalStructure> for SignalFile {
    fn from(s: SignalStructure) -> Self {
        SignalFile { signals: s.columns }
    }
}

impl SignalStructure {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid("signals: need one signal per column action"));
        }
        let k = columns[0].len();
        if k == 0 || columns.iter().any(|c| c.len() != k) {
            return Err(dim("signals: every signal must have the same positive length"));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("signals: non-finite entry"));
        }
        Ok(SignalStructure { columns })
    }

    /// Every action reveals itself.
    pub fn full_monitoring(b: usize) -> Self {
        SignalStructure { columns: (0..b).map(|j| MixedAction::pure(b, j).weights().to_vec()).collect() }
    }

    pub fn actions(&self) -> usize {
        self.columns.len()
    }

    pub fn signal_dim(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// `S y`.
    pub fn signal_of(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.signal_dim()];
        for (c, w) in self.columns.iter().zip(y) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        out
    }

    /// Distinct pure-action signals in order of first appearance.
    pub fn alphabet(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for c in &self.columns {
            if !out.iter().any(|o| o == c) {
                out.push(c.clone());
            }
        }
        out
    }
}

/// `{y in simplex : S y = mu}` through its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPolytope {
    pub signal: Vec<f64>,
    pub vertices: Vec<MixedAction>,
}

/// Vertices of a simplex slice are its basic feasible solutions: supports of
/// at most `k + 1` linearly independent columns of `[S; 1]`.
pub fn fiber_vertices(s: &SignalStructure, mu: &[f64]) -> Result<FiberPolytope> {
    let k = s.signal_dim();
    if mu.len() != k {
        return Err(dim(format!("signal has length {}, expected {k}", mu.len())));
    }
    let b = s.actions();
    let mut rhs = mu.to_vec();
    rhs.push(1.0);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for size in 1..=(k + 1).min(b) {
        for cols in combinations(b, size) {
            let m: Vec<Vec<f64>> = (0..=k)
                .map(|r| cols.iter().map(|&j| if r < k { s.columns[j][r] } else { 1.0 }).collect())
                .collect();
            let Some(w) = least_squares(&m, &rhs) else { continue };
            if w.iter().any(|v| *v < -FIBER_TOL) {
                continue;
            }
            let mut y = vec![0.0; b];
            for (&j, v) in cols.iter().zip(&w) {
                y[j] = v.max(0.0);
            }
            let total: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v /= total);
            let sy = s.signal_of(&y);
            if sy.iter().zip(mu).any(|(a, b)| (a - b).abs() > FIBER_TOL) {
                continue;
            }
            if !vertices.iter().any(|v| v.iter().zip(&y).all(|(a, b)| (a - b).abs() <= FIBER_TOL)) {
                vertices.push(y);
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::Infeasible(format!("signal {mu:?} is not achievable")));
    }
    Ok(FiberPolytope {
        signal: mu.to_vec(),
        vertices: vertices.into_iter().map(MixedAction::from_weights_unchecked).collect(),
    })
}

/// `h_{p(x, mu)}(u)`: the image of the fiber under `y -> xAy` attains its
/// support at a vertex.
pub fn fiber_support(game: &VectorGame, x: &MixedAction, fiber: &FiberPolytope, u: &[f64]) -> Result<f64> {
    if u.len() != game.dim() {
        return Err(dim("support direction does not match the payoff dimension"));
    }
    let mut best = f64::NEG_INFINITY;
    for v in &fiber.vertices {
        best = best.max(dot(u, &game.payoff(x, v)?));
    }
    Ok(best)
}

/// Linear description of the compatible measures on a fixed action x signal grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtildePolytope {
    pub actions: Vec<MixedAction>,
    pub signals: Vec<Vec<f64>>,
    /// Grid point `i` is `(actions[i / signals.len()], signals[i % signals.len()])`.
    pub fibers: Vec<FiberPolytope>,
    pub normals: Vec<Vec<f64>>,
    /// `rows[k][i] = h_{p_i}(u_k)`.
    pub rows: Vec<Vec<f64>>,
    /// `bounds[k] = h_E(u_k)`.
    pub bounds: Vec<f64>,
    pub empty: bool,
}

impl EtildePolytope {
    pub fn len(&self) -> usize {
        self.actions.len() * self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn action_index(&self, i: usize) -> usize {
        i / self.signals.len()
    }

    pub fn signal_index(&self, i: usize) -> usize {
        i % self.signals.len()
    }

    /// Grid points as concatenated coordinates `(x_i, mu_i)`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let mut p = self.actions[self.action_index(i)].weights().to_vec();
                p.extend_from_slice(&self.signals[self.signal_index(i)]);
                p
            })
            .collect()
    }

    /// Largest row violation of a weight vector.
    pub fn violation(&self, q: &[f64]) -> f64 {
        self.rows.iter().zip(&self.bounds).map(|(r, b)| dot(r, q) - b).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nearest compatible measure to `theta` and the squared distance.
    pub fn project(&self, theta: &DiscreteMeasure) -> Result<(DiscreteMeasure, f64)> {
        if self.empty {
            return Err(Error::Infeasible("no measure is compatible with the target".into()));
        }
        check_support(self, theta)?;
        project_to_measure_polytope(theta, &self.rows, &self.bounds)
    }
}

fn facets(target: &TargetSet) -> Result<Vec<Vec<f64>>> {
    match target {
        TargetSet::HalfSpace { normal, .. } => Ok(vec![normal.clone()]),
        TargetSet::Polytope(p) => Ok(p.normals.clone()),
        TargetSet::Ball { .. } => Err(invalid("target: a polytope is required; balls have no facet list")),
        TargetSet::Union { .. } => Err(invalid("target: unions are not convex; a polytope is required")),
    }
}

pub fn build_etilde(
    game: &VectorGame,
    target: &TargetSet,
    actions: &[MixedAction],
    signals: &SignalStructure,
) -> Result<EtildePolytope> {
    if target.dim() != game.dim() {
        return Err(dim("target dimension does not match the payoff dimension"));
    }
    if signals.actions() != game.cols() {
        return Err(dim(format!("signals: {} columns for a game with {} column actions", signals.actions(), game.cols())));
    }
    if actions.is_empty() || actions.iter().any(|x| x.len() != game.rows()) {
        return Err(dim("action grid does not match the row actions"));
    }
    let normals = facets(target)?;
    let bounds = normals.iter().map(|u| target.support(u)).collect::<Result<Vec<f64>>>()?;
    let alphabet = signals.alphabet();
    let fibers = alphabet.iter().map(|mu| fiber_vertices(signals, mu)).collect::<Result<Vec<_>>>()?;
    let ns = alphabet.len();
    let n = actions.len() * ns;
    let cells: Vec<Result<f64>> = map_indices(Exec::default(), normals.len() * n, |c| {
        let (k, i) = (c / n, c % n);
        fiber_support(game, &actions[i / ns], &fibers[i % ns], &normals[k])
    });
    let flat = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    let rows: Vec<Vec<f64>> = flat.chunks(n).map(|c| c.to_vec()).collect();
    let empty = !feasible(&rows, &bounds)?;
    Ok(EtildePolytope { actions: actions.to_vec(), signals: alphabet, fibers, normals, rows, bounds, empty })
}

fn feasible(rows: &[Vec<f64>], bounds: &[f64]) -> Result<bool> {
    let n = rows.first().map_or(0, |r| r.len());
    let mut lp = LpProblem::minimize(vec![0.0; n]);
    for (r, b) in rows.iter().zip(bounds) {
        lp.leq(r.clone(), *b);
    }
    lp.equal(vec![1.0; n], 1.0);
    Ok(matches!(solve_lp(&lp)?, LpOutcome::Optimal(_)))
}

fn check_support(et: &EtildePolytope, q: &DiscreteMeasure) -> Result<()> {
    if q.len() != et.len() {
        return Err(dim(format!("measure has {} points, the grid has {}", q.len(), et.len())));
    }
    let pts = et.points();
    for (i, (a, b)) in q.support().iter().zip(&pts).enumerate() {
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(invalid(format!("measure support point {i} is not grid point {i}")));
        }
    }
    Ok(())
}

pub fn etilde_membership(et: &EtildePolytope, q: &DiscreteMeasure) -> Result<bool> {
    check_support(et, q)?;
    Ok(et.violation(q.weights()) <= MEMBERSHIP_TOL)
}
