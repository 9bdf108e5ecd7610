//! Dense two-phase simplex and matrix-game values.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c.x
//! subject to  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper
//! ```
//!
//! and are brought to standard form internally (shifted, mirrored or split
//! variables, slack columns, artificial columns). Entering columns follow the
//! most-negative reduced cost until a run of degenerate pivots is seen, after
//! which the solver switches to Bland's smallest-index rule for the rest of the
//! solve. The ratio test always breaks ties on the smallest basic index.
//!
//! Duals are reported with the convention `c - A^T y >= 0` on the standard-form
//! columns, so a `<=` row of a minimization has `y <= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::game::MixedAction;

const PIVOT_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Minimize `objective . x` over `x >= 0` with no other constraint yet.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn leq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn geq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row.into_iter().map(|v| -v).collect());
        self.b_ub.push(-rhs);
        self
    }

    pub fn equal(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(invalid("LP without variables"));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(dim("bound vectors do not match the variable count"));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(dim("constraint rows and right-hand sides differ in length"));
        }
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(dim(format!("constraint row of length {} for {} variables", row.len(), n)));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(invalid("non-finite constraint coefficient"));
            }
        }
        if self.objective.iter().chain(&self.b_ub).chain(&self.b_eq).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite objective or right-hand side"));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(invalid(format!("bad bounds on variable {j}")));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(invalid(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per `<=` row (non-positive at optimality).
    pub dual_ub: Vec<f64>,
    /// One multiplier per equality row.
    pub dual_eq: Vec<f64>,
    /// Largest violation of dual feasibility or of complementary slackness,
    /// recomputed from the problem data.
    pub dual_residual: f64,
    /// Largest constraint violation of `x`, recomputed from the problem data.
    pub primal_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + s
    Shift(usize, f64),
    /// x = offset - s
    Mirror(usize, f64),
    /// x = s_plus - s_minus
    Split(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowOrigin {
    Ub(usize),
    Eq(usize),
    Bound,
}

struct StdRow {
    coeffs: Vec<f64>,
    is_le: bool,
    rhs: f64,
    origin: RowOrigin,
}

/// Working state of one solve. A solver can be reused but handles one problem
/// at a time.
#[derive(Debug, Default)]
pub struct Simplex {
    tableau: Vec<Vec<f64>>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    bland: bool,
    degenerate_run: usize,
    pub iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Simplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, p: &LpProblem) -> Result<LpOutcome> {
        p.validate()?;
        let n = p.num_vars();

        // Variable substitution.
        let mut maps = Vec::with_capacity(n);
        let mut ns = 0usize;
        for j in 0..n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            if lo.is_finite() {
                maps.push(VarMap::Shift(ns, lo));
                ns += 1;
            } else if hi.is_finite() {
                maps.push(VarMap::Mirror(ns, hi));
                ns += 1;
            } else {
                maps.push(VarMap::Split(ns, ns + 1));
                ns += 2;
            }
        }
        let mut std_cost = vec![0.0; ns];
        for (j, m) in maps.iter().enumerate() {
            let c = p.objective[j];
            match *m {
                VarMap::Shift(s, _) => std_cost[s] += c,
                VarMap::Mirror(s, _) => std_cost[s] -= c,
                VarMap::Split(a, b) => {
                    std_cost[a] += c;
                    std_cost[b] -= c;
                }
            }
        }
        let translate = |row: &[f64]| -> (Vec<f64>, f64) {
            let mut coeffs = vec![0.0; ns];
            let mut constant = 0.0;
            for (j, m) in maps.iter().enumerate() {
                let a = row[j];
                if a == 0.0 {
                    continue;
                }
                match *m {
                    VarMap::Shift(s, off) => {
                        coeffs[s] += a;
                        constant += a * off;
                    }
                    VarMap::Mirror(s, off) => {
                        coeffs[s] -= a;
                        constant += a * off;
                    }
                    VarMap::Split(sp, sm) => {
                        coeffs[sp] += a;
                        coeffs[sm] -= a;
                    }
                }
            }
            (coeffs, constant)
        };

        let mut rows = Vec::new();
        for (i, row) in p.a_ub.iter().enumerate() {
            let (coeffs, c) = translate(row);
            rows.push(StdRow { coeffs, is_le: true, rhs: p.b_ub[i] - c, origin: RowOrigin::Ub(i) });
        }
        for (i, row) in p.a_eq.iter().enumerate() {
            let (coeffs, c) = translate(row);
            rows.push(StdRow { coeffs, is_le: false, rhs: p.b_eq[i] - c, origin: RowOrigin::Eq(i) });
        }
        for (j, m) in maps.iter().enumerate() {
            if let VarMap::Shift(s, lo) = *m {
                if p.upper[j].is_finite() {
                    let mut coeffs = vec![0.0; ns];
                    coeffs[s] = 1.0;
                    rows.push(StdRow { coeffs, is_le: true, rhs: p.upper[j] - lo, origin: RowOrigin::Bound });
                }
            }
        }

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.is_le).count();
        // Column layout: structural | slack | artificial | rhs
        let mut slack_col = vec![usize::MAX; m];
        let mut next = ns;
        for (i, r) in rows.iter().enumerate() {
            if r.is_le {
                slack_col[i] = next;
                next += 1;
            }
        }
        let mut flipped = vec![false; m];
        let mut init_col = vec![0usize; m];
        let mut art_rows = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            flipped[i] = r.rhs < 0.0;
            let slack_positive = r.is_le && !flipped[i];
            if slack_positive {
                init_col[i] = slack_col[i];
            } else {
                art_rows.push(i);
            }
        }
        let art_start = ns + n_slack;
        for (k, &i) in art_rows.iter().enumerate() {
            init_col[i] = art_start + k;
        }
        let width = art_start + art_rows.len();
        self.width = width;
        self.tableau = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let sign = if flipped[i] { -1.0 } else { 1.0 };
                let mut t = vec![0.0; width + 1];
                for (c, v) in r.coeffs.iter().enumerate() {
                    t[c] = sign * v;
                }
                if r.is_le {
                    t[slack_col[i]] = sign;
                }
                if init_col[i] >= art_start {
                    t[init_col[i]] = 1.0;
                }
                t[width] = sign * r.rhs;
                t
            })
            .collect();
        self.basis = init_col.clone();
        self.bland = false;
        self.degenerate_run = 0;
        self.iterations = 0;

        // Phase 1.
        if !art_rows.is_empty() {
            let mut cost1 = vec![0.0; width];
            for c in cost1.iter_mut().skip(art_start) {
                *c = 1.0;
            }
            self.price(&cost1);
            match self.run(width)? {
                Phase::Optimal => {}
                Phase::Unbounded => return Err(Error::Numerical("phase one reported unbounded".into())),
            }
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= art_start)
                .map(|(i, _)| self.tableau[i][width])
                .sum();
            let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeas > FEAS_TOL * scale {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis where possible.
            for i in 0..m {
                if self.basis[i] >= art_start {
                    let col = (0..art_start)
                        .filter(|&j| self.tableau[i][j].abs() > 1e-9)
                        .max_by(|&a, &b| self.tableau[i][a].abs().total_cmp(&self.tableau[i][b].abs()));
                    if let Some(q) = col {
                        self.pivot(i, q);
                    }
                }
            }
        }

        // Phase 2.
        let mut cost2 = vec![0.0; width];
        cost2[..ns].copy_from_slice(&std_cost);
        self.price(&cost2);
        self.bland = false;
        self.degenerate_run = 0;
        match self.run(art_start)? {
            Phase::Optimal => {}
            Phase::Unbounded => return Ok(LpOutcome::Unbounded),
        }

        // Primal values.
        let mut s = vec![0.0; width];
        for (i, &b) in self.basis.iter().enumerate() {
            s[b] = self.tableau[i][width];
        }
        let x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift(c, off) => off + s[c],
                VarMap::Mirror(c, off) => off - s[c],
                VarMap::Split(a, b) => s[a] - s[b],
            })
            .collect();

        // Duals of the standard rows, then of the original rows.
        let y_std: Vec<f64> = (0..m)
            .map(|i| {
                let y = -self.reduced[init_col[i]];
                if flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let mut dual_ub = vec![0.0; p.a_ub.len()];
        let mut dual_eq = vec![0.0; p.a_eq.len()];
        for (i, r) in rows.iter().enumerate() {
            match r.origin {
                RowOrigin::Ub(k) => dual_ub[k] = y_std[i],
                RowOrigin::Eq(k) => dual_eq[k] = y_std[i],
                RowOrigin::Bound => {}
            }
        }

        // Certificates recomputed from the data.
        let mut dual_residual = 0.0f64;
        let mut basic = vec![false; width];
        for &b in &self.basis {
            basic[b] = true;
        }
        for c in 0..ns {
            let mut d = std_cost[c];
            for (i, r) in rows.iter().enumerate() {
                d -= y_std[i] * r.coeffs[c];
            }
            dual_residual = dual_residual.max(-d);
            if basic[c] && s[c] > FEAS_TOL {
                dual_residual = dual_residual.max(d.abs());
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.is_le {
                let d = -y_std[i];
                dual_residual = dual_residual.max(-d);
                if s[slack_col[i]] > FEAS_TOL {
                    dual_residual = dual_residual.max(d.abs());
                }
            }
        }
        let mut primal_residual = 0.0f64;
        for (row, &b) in p.a_ub.iter().zip(&p.b_ub) {
            let v: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            primal_residual = primal_residual.max(v - b);
        }
        for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
            let v: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            primal_residual = primal_residual.max((v - b).abs());
        }
        for j in 0..n {
            primal_residual = primal_residual.max(p.lower[j] - x[j]).max(x[j] - p.upper[j]);
        }
        let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective, dual_ub, dual_eq, dual_residual, primal_residual }))
    }

    fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        let mut r = cost.to_vec();
        r.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, tj) in r.iter_mut().zip(&self.tableau[i]) {
                    *rj -= cb * tj;
                }
            }
        }
        r.truncate(w + 1);
        self.reduced = r;
    }

    /// Iterate with entering columns restricted to `0..allowed`.
    fn run(&mut self, allowed: usize) -> Result<Phase> {
        let w = self.width;
        let m = self.tableau.len();
        let cap = 50_000 + 50 * (m + w);
        loop {
            if self.iterations > cap {
                return Err(Error::Numerical(format!("simplex exceeded {cap} iterations")));
            }
            let entering = if self.bland {
                (0..allowed).find(|&j| self.reduced[j] < -OPT_TOL)
            } else {
                let mut best = None;
                let mut best_val = -OPT_TOL;
                for j in 0..allowed {
                    if self.reduced[j] < best_val {
                        best_val = self.reduced[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else { return Ok(Phase::Optimal) };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.tableau[i][q];
                if a > PIVOT_TOL {
                    let ratio = self.tableau[i][w].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(p) = leave else { return Ok(Phase::Unbounded) };
            if best_ratio <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_SWITCH {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(p, q);
            self.iterations += 1;
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.tableau[p][q];
        {
            let row = &mut self.tableau[p];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let prow = self.tableau[p].clone();
        for (i, row) in self.tableau.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[q] = 0.0;
                if row[w].abs() < 1e-14 {
                    row[w] = 0.0;
                }
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (v, pv) in self.reduced.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.reduced[q] = 0.0;
        }
        self.basis[p] = q;
    }
}

/// Solve with a fresh [`Simplex`] instance.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    Simplex::new().solve(p)
}

/// Value and optimal mixed strategies of the zero-sum matrix game in which the
/// row player minimizes `x^T M y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    /// `min_x max_y x^T M y`, from the row player's program.
    pub value: f64,
    /// `max_y min_x x^T M y`, from the column player's program.
    pub lower_value: f64,
    pub xstar: MixedAction,
    pub ystar: MixedAction,
}

impl GameSolution {
    pub fn isaacs_gap(&self) -> f64 {
        (self.value - self.lower_value).abs()
    }
}

fn check_matrix(m: &[Vec<f64>]) -> Result<(usize, usize)> {
    let a = m.len();
    let b = m.first().map_or(0, |r| r.len());
    if a == 0 || b == 0 {
        return Err(invalid("empty payoff matrix"));
    }
    if m.iter().any(|r| r.len() != b) {
        return Err(dim("ragged payoff matrix"));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite payoff"));
    }
    Ok((a, b))
}

/// Row player's program: `min v` s.t. `sum_i x_i M_ij <= v`, `x` in the simplex.
/// Returns `(value, x)`.
pub fn minimizer_program(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = check_matrix(m)?;
    let mut obj = vec![0.0; a + 1];
    obj[a] = 1.0;
    let mut lp = LpProblem::minimize(obj);
    lp.bounds(a, f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..b {
        let mut row: Vec<f64> = (0..a).map(|i| m[i][j]).collect();
        row.push(-1.0);
        lp.leq(row, 0.0);
    }
    let mut simplex_row = vec![1.0; a];
    simplex_row.push(0.0);
    lp.equal(simplex_row, 1.0);
    let sol = solve_lp(&lp)?
        .optimal()
        .ok_or_else(|| Error::Numerical("matrix game program not optimal".into()))?;
    let x = normalize(&sol.x[..a]);
    Ok((sol.x[a], x))
}

/// Column player's program: `max w` s.t. `sum_j M_ij y_j >= w`, `y` in the simplex.
/// Returns `(value, y)`.
pub fn maximizer_program(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = check_matrix(m)?;
    let mut obj = vec![0.0; b + 1];
    obj[b] = -1.0;
    let mut lp = LpProblem::minimize(obj);
    lp.bounds(b, f64::NEG_INFINITY, f64::INFINITY);
    for row in m.iter().take(a) {
        let mut r: Vec<f64> = row.iter().map(|v| -v).collect();
        r.push(1.0);
        lp.leq(r, 0.0);
    }
    let mut simplex_row = vec![1.0; b];
    simplex_row.push(0.0);
    lp.equal(simplex_row, 1.0);
    let sol = solve_lp(&lp)?
        .optimal()
        .ok_or_else(|| Error::Numerical("matrix game program not optimal".into()))?;
    let y = normalize(&sol.x[..b]);
    Ok((sol.x[b], y))
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / s).collect()
}

/// Solves both players' programs. `value` and `lower_value` agree up to the
/// solver tolerance (LP duality).
pub fn matrix_game_value(m: &[Vec<f64>]) -> Result<GameSolution> {
    let (value, x) = minimizer_program(m)?;
    let (lower_value, y) = maximizer_program(m)?;
    Ok(GameSolution {
        value,
        lower_value,
        xstar: MixedAction::from_weights_unchecked(x),
        ystar: MixedAction::from_weights_unchecked(y),
    })
}

/// Lexicographically smallest row strategy among those guaranteeing at most
/// `value + tol` against every column.
pub fn lex_min_minimizer(m: &[Vec<f64>], value: f64, tol: f64) -> Result<Vec<f64>> {
    let (a, b) = check_matrix(m)?;
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    for k in 0..a {
        let mut obj = vec![0.0; a];
        obj[k] = 1.0;
        let mut lp = LpProblem::minimize(obj);
        for j in 0..b {
            lp.leq((0..a).map(|i| m[i][j]).collect(), value + tol);
        }
        lp.equal(vec![1.0; a], 1.0);
        for &(i, v) in &fixed {
            let mut row = vec![0.0; a];
            row[i] = 1.0;
            lp.leq(row, v + 1e-12);
        }
        let sol = solve_lp(&lp)?
            .optimal()
            .ok_or_else(|| Error::Numerical("lexicographic refinement infeasible".into()))?;
        fixed.push((k, sol.x[k].max(0.0)));
    }
    Ok(normalize(&fixed.iter().map(|f| f.1).collect::<Vec<f64>>()))
}

/// Lexicographically smallest column strategy among those guaranteeing at
/// least `value - tol` against every row.
pub fn lex_min_maximizer(m: &[Vec<f64>], value: f64, tol: f64) -> Result<Vec<f64>> {
    let (a, b) = check_matrix(m)?;
    let transposed: Vec<Vec<f64>> = (0..b).map(|j| (0..a).map(|i| -m[i][j]).collect()).collect();
    lex_min_minimizer(&transposed, -value, tol)
}
