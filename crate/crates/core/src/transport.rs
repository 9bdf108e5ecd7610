//! Exact discrete optimal transport with squared Euclidean cost.
//!
//! Plans come from the transportation LP. LP duals are not unique on discrete
//! instances, so the returned potentials are canonicalized: `phistar` is
//! replaced by the c-transform of the dual row potential and `phi` by the
//! c-transform of that, which keeps dual optimality, makes the pair exactly
//! c-conjugate, and defines `phi` on zero-weight support points too.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::linalg::dist_sq;
use crate::lp::{solve_lp, LpOutcome, LpProblem};

const WEIGHT_TOL: f64 = 1e-12;

/// Finitely supported probability measure. Zero weights are allowed, so a
/// measure can live on a fixed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct DiscreteMeasure {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureFile> for DiscreteMeasure {
    type Error = Error;
    fn try_from(f: MeasureFile) -> Result<Self> {
        DiscreteMeasure::new(f.support, f.weights)
    }
}

impl From<DiscreteMeasure> for MeasureFile {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureFile { support: m.support, weights: m.weights }
    }
}

impl DiscreteMeasure {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("support: measure needs at least one point"));
        }
        if support.len() != weights.len() {
            return Err(dim(format!("weights: {} weights for {} support points", weights.len(), support.len())));
        }
        let d = support[0].len();
        if d == 0 || support.iter().any(|p| p.len() != d) {
            return Err(dim("support: points must share a positive dimension"));
        }
        if support.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("support: non-finite coordinate"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights: negative or non-finite weight"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > WEIGHT_TOL * weights.len().max(1) as f64 {
            return Err(invalid(format!("weights: sum to {s}, expected 1")));
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i] == support[j] {
                    return Err(invalid(format!("support: points {j} and {i} coincide")));
                }
            }
        }
        Ok(DiscreteMeasure { support, weights })
    }

    /// Weights are clipped at zero and renormalized; the support is trusted.
    pub(crate) fn from_parts(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        DiscreteMeasure { support, weights: clipped.iter().map(|w| w / s).collect() }
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        DiscreteMeasure { support: vec![point], weights: vec![1.0] }
    }

    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    /// Same support, new weights (validated).
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.support.clone(), weights)
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    /// Largest distance between two support points.
    pub fn diameter(&self) -> f64 {
        diameter(&self.support)
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in 0..i {
            best = best.max(dist_sq(&points[i], &points[j]));
        }
    }
    best.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    /// `plan[i][j]`: mass moved from `mu` point `i` to `nu` point `j`.
    pub plan: Vec<Vec<f64>>,
    /// Squared Wasserstein distance.
    pub cost: f64,
    /// Potential on the `mu` support, `phi[anchor] = 0`.
    pub phi: Vec<f64>,
    /// Conjugate potential on the `nu` support.
    pub phistar: Vec<f64>,
    pub anchor: usize,
}

impl TransportResult {
    pub fn w2(&self) -> f64 {
        self.cost.max(0.0).sqrt()
    }

    /// `int phi dmu + int phistar dnu`.
    pub fn dual_objective(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        mu.integrate(&self.phi) + nu.integrate(&self.phistar)
    }
}

pub fn cost_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
    xs.iter().map(|x| ys.iter().map(|y| dist_sq(x, y)).collect()).collect()
}

/// `phistar(y) = min_x |x - y|^2 - phi(x)` over the points `from`.
pub fn conjugate(phi: &[f64], from: &[Vec<f64>], to: &[Vec<f64>]) -> Vec<f64> {
    to.iter()
        .map(|y| from.iter().zip(phi).map(|(x, p)| dist_sq(x, y) - p).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Optimal plan, squared distance and normalized potentials.
pub fn w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    if mu.dim() != nu.dim() {
        return Err(dim(format!("measures live in dimensions {} and {}", mu.dim(), nu.dim())));
    }
    let (n, m) = (mu.len(), nu.len());
    let c = cost_matrix(&mu.support, &nu.support);
    let mut lp = LpProblem::minimize(c.iter().flatten().copied().collect());
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        row[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = 1.0);
        lp.equal(row, mu.weights[i]);
    }
    for j in 0..m {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        lp.equal(row, nu.weights[j]);
    }
    let sol = match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => s,
        _ => return Err(Error::Numerical("transportation program not optimal".into())),
    };
    let plan: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| sol.x[i * m + j].max(0.0)).collect()).collect();
    let cost: f64 = plan.iter().flatten().zip(c.iter().flatten()).map(|(g, c)| g * c).sum();
    let (phi, phistar) = if cost <= 1e-14 {
        let phi = vec![0.0; n];
        let phistar = conjugate(&phi, &mu.support, &nu.support);
        (phi, phistar)
    } else {
        canonical_potentials(&sol.dual_eq[..n], &mu.support, &nu.support)
    };
    Ok(TransportResult { plan, cost, phi, phistar, anchor: 0 })
}

fn canonical_potentials(u: &[f64], xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let mut phistar = conjugate(u, xs, ys);
    let mut phi = conjugate(&phistar, ys, xs);
    let shift = phi[0];
    phi.iter_mut().for_each(|p| *p -= shift);
    phistar.iter_mut().for_each(|p| *p += shift);
    (phi, phistar)
}

/// `(1 - lambda) mu + lambda uniform` with `lambda = min(1, delta^2 / D^2)`
/// and `D` the support diameter.
pub fn smooth_delta(mu: &DiscreteMeasure, delta: f64) -> Result<DiscreteMeasure> {
    smooth_delta_with_diameter(mu, delta, mu.diameter())
}

/// As [`smooth_delta`] with an explicit reference diameter. Smoothing both
/// factors of a product with the product diameter keeps the product within
/// `delta` of the unsmoothed product.
pub fn smooth_delta_with_diameter(mu: &DiscreteMeasure, delta: f64, diam: f64) -> Result<DiscreteMeasure> {
    let lambda = smoothing_weight(delta, diam)?;
    let u = 1.0 / mu.len() as f64;
    let weights = mu.weights.iter().map(|w| (1.0 - lambda) * w + lambda * u).collect();
    Ok(DiscreteMeasure { support: mu.support.clone(), weights })
}

/// `min(1, delta^2 / D^2)`; a single-point support gives 1.
pub fn smoothing_weight(delta: f64, diam: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid(format!("delta: must be positive, got {delta}")));
    }
    if diam <= 0.0 {
        return Ok(1.0);
    }
    Ok((delta * delta / (diam * diam)).min(1.0))
}

/// Nearest measure (in `W2`) to `theta` among weight vectors `q` on the same
/// support with `rows . q <= bounds`. One LP over the plan and `q` jointly.
pub fn project_to_measure_polytope(
    theta: &DiscreteMeasure,
    rows: &[Vec<f64>],
    bounds: &[f64],
) -> Result<(DiscreteMeasure, f64)> {
    let n = theta.len();
    if rows.len() != bounds.len() || rows.iter().any(|r| r.len() != n) {
        return Err(dim("constraint rows must have one coefficient per support point"));
    }
    let c = cost_matrix(&theta.support, &theta.support);
    let mut obj: Vec<f64> = c.iter().flatten().copied().collect();
    obj.extend(std::iter::repeat(0.0).take(n));
    let nv = n * n + n;
    let mut lp = LpProblem::minimize(obj);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        lp.equal(row, theta.weights[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[i * n + j] = 1.0;
        }
        row[n * n + j] = -1.0;
        lp.equal(row, 0.0);
    }
    for (r, b) in rows.iter().zip(bounds) {
        let mut row = vec![0.0; nv];
        row[n * n..].copy_from_slice(r);
        lp.leq(row, *b);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => {
            let q = DiscreteMeasure::from_parts(theta.support.clone(), s.x[n * n..].to_vec());
            Ok((q, s.objective.max(0.0)))
        }
        LpOutcome::Infeasible => Err(Error::Infeasible("measure constraints admit no probability vector".into())),
        LpOutcome::Unbounded => Err(Error::Numerical("projection program unbounded".into())),
    }
}
