//! Bilinear vector-payoff games and target sets.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{combinations, dist_sq, dot, least_squares, norm};
use crate::lp::{solve_lp, LpOutcome, LpProblem};

const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over pure actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("mixed action over zero actions"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid(format!("mixed action has a negative or non-finite weight: {weights:?}")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL * weights.len() as f64 {
            return Err(invalid(format!("mixed action weights sum to {s}")));
        }
        Ok(MixedAction(weights))
    }

    pub(crate) fn from_weights_unchecked(weights: Vec<f64>) -> Self {
        MixedAction(weights)
    }

    pub fn pure(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        MixedAction(w)
    }

    pub fn uniform(n: usize) -> Self {
        MixedAction(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `lambda * self + (1 - lambda) * other`
    pub fn mix(&self, other: &MixedAction, lambda: f64) -> Result<MixedAction> {
        if self.len() != other.len() {
            return Err(dim("mixing actions of different sizes"));
        }
        Ok(MixedAction(self.0.iter().zip(&other.0).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()))
    }
}

/// `a x b` array of `d`-dimensional payoff vectors, stored row-major with the
/// payoff coordinates innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct VectorGame {
    a: usize,
    b: usize,
    d: usize,
    payoffs: Vec<f64>,
    kappa: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    payoffs: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<GameFile> for VectorGame {
    type Error = Error;
    fn try_from(f: GameFile) -> Result<Self> {
        VectorGame::new(f.payoffs)
    }
}

impl From<VectorGame> for GameFile {
    fn from(g: VectorGame) -> Self {
        GameFile {
            payoffs: (0..g.a).map(|i| (0..g.b).map(|j| g.entry(i, j).to_vec()).collect()).collect(),
        }
    }
}

impl VectorGame {
    pub fn new(payoffs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let a = payoffs.len();
        if a == 0 {
            return Err(invalid("payoffs: game needs at least one row action"));
        }
        let b = payoffs[0].len();
        if b == 0 {
            return Err(invalid("payoffs: game needs at least one column action"));
        }
        let d = payoffs[0][0].len();
        if d == 0 {
            return Err(invalid("payoffs: payoff dimension must be at least one"));
        }
        let mut flat = Vec::with_capacity(a * b * d);
        for (i, row) in payoffs.iter().enumerate() {
            if row.len() != b {
                return Err(dim(format!("payoffs: row {i} has {} entries, expected {b}", row.len())));
            }
            for (j, v) in row.iter().enumerate() {
                if v.len() != d {
                    return Err(dim(format!("payoffs: entry ({i},{j}) has dimension {}, expected {d}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(format!("payoffs: entry ({i},{j}) is not finite")));
                }
                flat.extend_from_slice(v);
            }
        }
        let kappa = flat.chunks(d).map(norm).fold(0.0, f64::max);
        Ok(VectorGame { a, b, d, payoffs: flat, kappa })
    }

    /// Scalar (`d = 1`) game from a plain matrix.
    pub fn scalar(m: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(m.into_iter().map(|row| row.into_iter().map(|v| vec![v]).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.a
    }

    pub fn cols(&self) -> usize {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Largest Euclidean norm of a payoff entry.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.b + j) * self.d;
        &self.payoffs[k..k + self.d]
    }

    pub fn payoff(&self, x: &MixedAction, y: &MixedAction) -> Result<Vec<f64>> {
        if x.len() != self.a || y.len() != self.b {
            return Err(dim(format!(
                "actions of sizes ({}, {}) for a {}x{} game",
                x.len(),
                y.len(),
                self.a,
                self.b
            )));
        }
        let mut out = vec![0.0; self.d];
        self.payoff_into(x.weights(), y.weights(), &mut out);
        Ok(out)
    }

    /// Unchecked bilinear evaluation into `out`.
    pub fn payoff_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                let w = xi * yj;
                if w == 0.0 {
                    continue;
                }
                for (o, e) in out.iter_mut().zip(self.entry(i, j)) {
                    *o += w * e;
                }
            }
        }
    }

    /// The scalar matrix `M_p[i][j] = p . A[i][j]`.
    pub fn scalarize(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        if p.len() != self.d {
            return Err(dim("direction does not match payoff dimension"));
        }
        Ok((0..self.a).map(|i| (0..self.b).map(|j| dot(p, self.entry(i, j))).collect()).collect())
    }

    /// Axis-aligned bounding box of the payoff entries (and so of their convex hull).
    pub fn payoff_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for e in self.payoffs.chunks(self.d) {
            for k in 0..self.d {
                lo[k] = lo[k].min(e[k]);
                hi[k] = hi[k].max(e[k]);
            }
        }
        (lo, hi)
    }

    /// Swap the players' roles: entry `(j, i)` of the result is entry `(i, j)` here.
    pub fn transposed(&self) -> VectorGame {
        let payoffs = (0..self.b).map(|j| (0..self.a).map(|i| self.entry(i, j).to_vec()).collect()).collect();
        VectorGame::new(payoffs).expect("transpose of a valid game")
    }
}

/// Convex polytope `{z : u_k . z <= c_k}`, optionally with a known vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

impl Polytope {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let p = Polytope { normals, offsets, vertices: None };
        p.validate()?;
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for k in 0..d {
            let mut u = vec![0.0; d];
            u[k] = 1.0;
            normals.push(u.clone());
            offsets.push(hi[k]);
            u[k] = -1.0;
            normals.push(u);
            offsets.push(-lo[k]);
        }
        Self::new(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.normals.first().map_or(0, |u| u.len())
    }

    pub fn contains(&self, g: &[f64], tol: f64) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(u, c)| dot(u, g) <= c + tol)
    }

    fn validate(&self) -> Result<()> {
        if self.normals.is_empty() || self.normals.len() != self.offsets.len() {
            return Err(invalid("polytope: need matching, non-empty normals and offsets"));
        }
        let d = self.dim();
        if d == 0 || self.normals.iter().any(|u| u.len() != d) {
            return Err(dim("polytope: facet normals of inconsistent dimension"));
        }
        if self.normals.iter().flatten().chain(&self.offsets).any(|v| !v.is_finite()) {
            return Err(invalid("polytope: non-finite facet data"));
        }
        if let Some(vs) = &self.vertices {
            if vs.iter().any(|v| v.len() != d || !self.contains(v, 1e-9)) {
                return Err(invalid("polytope: listed vertex outside the facet description"));
            }
        }
        // Feasibility LP over free variables.
        let mut lp = LpProblem::minimize(vec![0.0; d]);
        for k in 0..d {
            lp.bounds(k, f64::NEG_INFINITY, f64::INFINITY);
        }
        for (u, &c) in self.normals.iter().zip(&self.offsets) {
            lp.leq(u.clone(), c);
        }
        match solve_lp(&lp)? {
            LpOutcome::Infeasible => Err(Error::Infeasible("polytope: empty target set".into())),
            _ => Ok(()),
        }
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(dim("support direction does not match polytope dimension"));
        }
        if let Some(vs) = &self.vertices {
            return Ok(vs.iter().map(|v| dot(u, v)).fold(f64::NEG_INFINITY, f64::max));
        }
        let d = self.dim();
        let mut lp = LpProblem::minimize(u.iter().map(|v| -v).collect());
        for k in 0..d {
            lp.bounds(k, f64::NEG_INFINITY, f64::INFINITY);
        }
        for (n, &c) in self.normals.iter().zip(&self.offsets) {
            lp.leq(n.clone(), c);
        }
        match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => Ok(-s.objective),
            LpOutcome::Unbounded => Err(Error::Unbounded(u.to_vec())),
            LpOutcome::Infeasible => Err(Error::Infeasible("polytope: empty target set".into())),
        }
    }

    /// Euclidean projection. The minimizer lies on some face; every face is
    /// cut out by at most `d` independent active facets, so the exact projection
    /// is the nearest feasible point among affine projections onto those faces.
    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        if self.contains(g, 0.0) {
            return g.to_vec();
        }
        let d = self.dim();
        let m = self.normals.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 1..=d.min(m) {
            for active in combinations(m, k) {
                let Some(z) = self.face_projection(g, &active) else { continue };
                if !self.contains(&z, 1e-10) {
                    continue;
                }
                let dd = dist_sq(&z, g);
                if best.as_ref().map_or(true, |(b, _)| dd < *b) {
                    best = Some((dd, z));
                }
            }
        }
        best.map(|(_, z)| z).unwrap_or_else(|| g.to_vec())
    }

    /// Projection of `g` on the affine set `{u_k . z = c_k, k in active}`.
    fn face_projection(&self, g: &[f64], active: &[usize]) -> Option<Vec<f64>> {
        // z = g - U^T lambda with (U U^T) lambda = U g - c
        let rows: Vec<&Vec<f64>> = active.iter().map(|&k| &self.normals[k]).collect();
        let gram: Vec<Vec<f64>> = rows.iter().map(|r| rows.iter().map(|s| dot(r, s)).collect()).collect();
        let rhs: Vec<f64> = active.iter().map(|&k| dot(&self.normals[k], g) - self.offsets[k]).collect();
        let lambda = least_squares(&gram, &rhs)?;
        // reject dependent active sets: residual check
        for (row, r) in gram.iter().zip(&rhs) {
            if (dot(row, &lambda) - r).abs() > 1e-9 * (1.0 + r.abs()) {
                return None;
            }
        }
        let mut z = g.to_vec();
        for (l, u) in lambda.iter().zip(rows) {
            for (zk, uk) in z.iter_mut().zip(u) {
                *zk -= l * uk;
            }
        }
        Some(z)
    }
}

/// Closed target set `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSet {
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Polytope(Polytope),
    Union { members: Vec<TargetSet> },
}

impl TargetSet {
    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let t = TargetSet::HalfSpace { normal, offset };
        t.validate()?;
        Ok(t)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let t = TargetSet::Ball { center, radius };
        t.validate()?;
        Ok(t)
    }

    pub fn polytope(p: Polytope) -> Result<Self> {
        let t = TargetSet::Polytope(p);
        t.validate()?;
        Ok(t)
    }

    pub fn union(members: Vec<TargetSet>) -> Result<Self> {
        let t = TargetSet::Union { members };
        t.validate()?;
        Ok(t)
    }

    /// Checks that the set is well formed and nonempty.
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSet::HalfSpace { normal, offset } => {
                if normal.is_empty() || normal.iter().chain([offset]).any(|v| !v.is_finite()) {
                    return Err(invalid("half_space: normal must be non-empty and finite"));
                }
                if norm(normal) == 0.0 {
                    return Err(invalid("half_space: normal must be nonzero"));
                }
                Ok(())
            }
            TargetSet::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("ball: center must be non-empty and finite"));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(invalid("ball: radius must be finite and non-negative"));
                }
                Ok(())
            }
            TargetSet::Polytope(p) => p.validate(),
            TargetSet::Union { members } => {
                if members.is_empty() {
                    return Err(Error::Infeasible("union: no members, the target is empty".into()));
                }
                let d = members[0].dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != d {
                        return Err(dim("union: members of different dimensions"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSet::HalfSpace { normal, .. } => normal.len(),
            TargetSet::Ball { center, .. } => center.len(),
            TargetSet::Polytope(p) => p.dim(),
            TargetSet::Union { members } => members.first().map_or(0, |m| m.dim()),
        }
    }

    pub fn distance(&self, g: &[f64]) -> f64 {
        match self {
            TargetSet::HalfSpace { normal, offset } => (dot(normal, g) - offset).max(0.0) / norm(normal),
            TargetSet::Ball { center, radius } => (dist_sq(g, center).sqrt() - radius).max(0.0),
            TargetSet::Polytope(p) => dist_sq(g, &p.project(g)).sqrt(),
            TargetSet::Union { members } => members.iter().map(|m| m.distance(g)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        match self {
            TargetSet::HalfSpace { normal, offset } => {
                let excess = (dot(normal, g) - offset).max(0.0);
                let nn = dot(normal, normal);
                g.iter().zip(normal).map(|(gi, ui)| gi - excess * ui / nn).collect()
            }
            TargetSet::Ball { center, radius } => {
                let r = dist_sq(g, center).sqrt();
                if r <= *radius {
                    g.to_vec()
                } else {
                    center.iter().zip(g).map(|(c, gi)| c + (gi - c) * radius / r).collect()
                }
            }
            TargetSet::Polytope(p) => p.project(g),
            TargetSet::Union { members } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (k, m) in members.iter().enumerate() {
                    let dk = m.distance(g);
                    if dk < best_d {
                        best_d = dk;
                        best = k;
                    }
                }
                members[best].project(g)
            }
        }
    }

    /// `sup_{z in E} u . z`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(dim("support direction does not match target dimension"));
        }
        match self {
            TargetSet::HalfSpace { normal, offset } => {
                // bounded only along the outward normal
                let nn = dot(normal, normal);
                let lambda = dot(u, normal) / nn;
                let residual: f64 = u.iter().zip(normal).map(|(a, b)| (a - lambda * b).powi(2)).sum();
                if lambda >= 0.0 && residual <= 1e-18 * (1.0 + dot(u, u)) {
                    Ok(lambda * offset)
                } else {
                    Err(Error::Unbounded(u.to_vec()))
                }
            }
            TargetSet::Ball { center, radius } => Ok(dot(u, center) + radius * norm(u)),
            TargetSet::Polytope(p) => p.support(u),
            TargetSet::Union { members } => {
                let mut best = f64::NEG_INFINITY;
                for m in members {
                    best = best.max(m.support(u)?);
                }
                Ok(best)
            }
        }
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match self {
            TargetSet::Polytope(p) => Some(p),
            _ => None,
        }
    }
}
