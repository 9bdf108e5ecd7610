//! The lifted game on measures over a fixed action x signal grid `X x Z`.
//!
//! Stage outcomes are product measures `xbar (x) zbar` and the state is their
//! running average. Actions are restricted to `(1 - lambda) p + lambda u`
//! with `u` uniform, which turns every inner problem into a matrix game in
//! `p` after an affine substitution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{dim, invalid, Error, Result};
use crate::lp::{lex_min_maximizer, lex_min_minimizer, matrix_game_value};
use crate::pm::EtildePolytope;
use crate::transport::{diameter, smoothing_weight, w2, DiscreteMeasure};

/// Product grid; flat index of `(i, j)` is `i * |Z| + j` and its coordinates
/// are `x_i` followed by `z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedGrid {
    pub xs: Vec<Vec<f64>>,
    pub zs: Vec<Vec<f64>>,
}

impl LiftedGrid {
    pub fn new(xs: Vec<Vec<f64>>, zs: Vec<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() || zs.is_empty() {
            return Err(invalid("lifted grid needs points on both factors"));
        }
        Ok(LiftedGrid { xs, zs })
    }

    pub fn from_etilde(et: &EtildePolytope) -> Self {
        LiftedGrid { xs: et.actions.iter().map(|a| a.weights().to_vec()).collect(), zs: et.signals.clone() }
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nz(&self) -> usize {
        self.zs.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for x in &self.xs {
            for z in &self.zs {
                let mut p = x.clone();
                p.extend_from_slice(z);
                out.push(p);
            }
        }
        out
    }

    /// `sqrt(diam(X)^2 + diam(Z)^2)`.
    pub fn diameter(&self) -> f64 {
        let (dx, dz) = (diameter(&self.xs), diameter(&self.zs));
        (dx * dx + dz * dz).sqrt()
    }

    pub fn product(&self, xbar: &[f64], zbar: &[f64]) -> Vec<f64> {
        xbar.iter().flat_map(|a| zbar.iter().map(move |b| a * b)).collect()
    }

    pub fn measure(&self, weights: Vec<f64>) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.points(), weights)
    }
}

/// Mixing floors of the two factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRestrictedSimplex {
    pub lambda_x: f64,
    pub lambda_z: f64,
}

impl DeltaRestrictedSimplex {
    pub const NONE: DeltaRestrictedSimplex = DeltaRestrictedSimplex { lambda_x: 0.0, lambda_z: 0.0 };

    /// Both factors mixed with `min(1, delta^2 / D^2)`, `D` the product
    /// diameter, so smoothed products stay within `delta` of the originals.
    pub fn for_delta(grid: &LiftedGrid, delta: f64) -> Result<Self> {
        let l = smoothing_weight(delta, grid.diameter())?;
        Ok(DeltaRestrictedSimplex { lambda_x: l, lambda_z: l })
    }

    pub fn restrict(lambda: f64, p: &[f64]) -> Vec<f64> {
        let u = lambda / p.len() as f64;
        p.iter().map(|w| (1.0 - lambda) * w + u).collect()
    }
}

/// `M'[i][j] = sum_ab ex_i[a] phi[a][b] ez_j[b]` with `ex_i` and `ez_j` the
/// restricted images of the vertices.
fn restricted_matrix(grid: &LiftedGrid, phi: &[f64], r: &DeltaRestrictedSimplex) -> Vec<Vec<f64>> {
    let (nx, nz) = (grid.nx(), grid.nz());
    let row_mean: Vec<f64> = (0..nx).map(|a| (0..nz).map(|b| phi[a * nz + b]).sum::<f64>() / nz as f64).collect();
    let col_mean: Vec<f64> = (0..nz).map(|b| (0..nx).map(|a| phi[a * nz + b]).sum::<f64>() / nx as f64).collect();
    let mean = row_mean.iter().sum::<f64>() / nx as f64;
    let (lx, lz) = (r.lambda_x, r.lambda_z);
    (0..nx)
        .map(|i| {
            (0..nz)
                .map(|j| {
                    (1.0 - lx) * (1.0 - lz) * phi[i * nz + j]
                        + (1.0 - lx) * lz * row_mean[i]
                        + lx * (1.0 - lz) * col_mean[j]
                        + lx * lz * mean
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WHamiltonian {
    /// `inf_x sup_z`.
    pub upper: f64,
    /// `sup_z inf_x`.
    pub lower: f64,
}

/// `(1/t) (opt_x opt_z int phi d(x (x) z) - int phi dtheta)` over the
/// restricted simplices.
pub fn w_hamiltonian(
    grid: &LiftedGrid,
    t: f64,
    theta: &DiscreteMeasure,
    phi: &[f64],
    restriction: &DeltaRestrictedSimplex,
) -> Result<WHamiltonian> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("lifted hamiltonian needs t > 0, got {t}")));
    }
    if phi.len() != grid.len() || theta.len() != grid.len() {
        return Err(dim("potential and measure must live on the full lifted grid"));
    }
    let m = restricted_matrix(grid, phi, restriction);
    let sol = matrix_game_value(&m)?;
    let base = theta.integrate(phi);
    Ok(WHamiltonian { upper: (sol.value - base) / t, lower: (sol.lower_value - base) / t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityResidual {
    /// `t H(t, nu, -phi*) - s H(s, mu, phi) - W2^2(mu, nu)`.
    pub residual: f64,
    pub w2sq: f64,
}

impl InequalityResidual {
    /// Residual of the weaker form `... >= -k' W2^2`.
    pub fn weak(&self, k_prime: f64) -> f64 {
        self.residual + (1.0 + k_prime) * self.w2sq
    }
}

pub fn hamiltonian_inequality_residual(
    grid: &LiftedGrid,
    s: f64,
    t: f64,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    restriction: &DeltaRestrictedSimplex,
) -> Result<InequalityResidual> {
    let tr = w2(mu, nu)?;
    let neg_star: Vec<f64> = tr.phistar.iter().map(|v| -v).collect();
    let hn = w_hamiltonian(grid, t, nu, &neg_star, restriction)?;
    let hm = w_hamiltonian(grid, s, mu, &tr.phi, restriction)?;
    Ok(InequalityResidual { residual: t * hn.upper - s * hm.upper - tr.cost, w2sq: tr.cost })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyChoice {
    /// Unrestricted weights chosen by the matrix game.
    pub p: Vec<f64>,
    /// Restricted action actually played.
    pub xbar: Vec<f64>,
    pub qstar: DiscreteMeasure,
    /// Squared distance from the state to the compatible set.
    pub cost: f64,
    pub phi: Vec<f64>,
}

/// Moves the average towards its projection on the compatible set: the
/// potential from the state to the projection is the first variation of the
/// squared distance, and the action minimizes its worst-case integral.
pub fn greedy_step(
    grid: &LiftedGrid,
    theta: &DiscreteMeasure,
    et: &EtildePolytope,
    restriction: &DeltaRestrictedSimplex,
) -> Result<GreedyChoice> {
    let (qstar, cost) = et.project(theta)?;
    greedy_from_projection(grid, theta, qstar, cost, restriction)
}

fn greedy_from_projection(
    grid: &LiftedGrid,
    theta: &DiscreteMeasure,
    qstar: DiscreteMeasure,
    cost: f64,
    restriction: &DeltaRestrictedSimplex,
) -> Result<GreedyChoice> {
    let phi = if cost <= 1e-12 { vec![0.0; grid.len()] } else { w2(theta, &qstar)?.phi };
    let m = restricted_matrix(grid, &phi, restriction);
    let sol = matrix_game_value(&m)?;
    let p = lex_min_minimizer(&m, sol.value, 1e-9)?;
    let xbar = DeltaRestrictedSimplex::restrict(restriction.lambda_x, &p);
    Ok(GreedyChoice { p, xbar, qstar, cost, phi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WStrategy {
    Greedy,
    /// Fixed weights on the X grid every stage.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WAdversary {
    /// Sees player 1's (deterministic) action and picks the pure signal
    /// that maximizes the distance to the compatible set after the step.
    BestResponse,
    /// Maximizing side of the matrix game on the current potential.
    PotentialMaximin,
    Stationary(Vec<f64>),
    /// Cycles through the listed weight vectors.
    Fixed(Vec<Vec<f64>>),
    RandomSeeded(u64),
}

impl WAdversary {
    pub fn name(&self) -> String {
        match self {
            WAdversary::BestResponse => "best_response".into(),
            WAdversary::PotentialMaximin => "potential_maximin".into(),
            WAdversary::Stationary(_) => "stationary".into(),
            WAdversary::Fixed(_) => "fixed".into(),
            WAdversary::RandomSeeded(s) => format!("random_{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WSimConfig {
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    /// Smooth player 1's fixed actions as well as the adversary's.
    pub smooth_both: bool,
    /// Keep every `stride`-th state (0 keeps none).
    pub dump_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WStage {
    pub m: usize,
    pub w2sq: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WTrajectory {
    pub stages: Vec<WStage>,
    /// Final average of the played (smoothed) outcomes.
    pub theta: DiscreteMeasure,
    /// Final average of the unsmoothed outcomes.
    pub theta_raw: DiscreteMeasure,
    pub dumps: Vec<(usize, Vec<f64>)>,
}

impl WTrajectory {
    pub fn at(&self, m: usize) -> &WStage {
        &self.stages[m - 1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,W2sq,W2\n");
        for s in &self.stages {
            let _ = writeln!(out, "{},{},{}", s.m, s.w2sq, s.w2);
        }
        out
    }
}

pub fn run_wsim(et: &EtildePolytope, strategy: &WStrategy, adversary: &WAdversary, cfg: &WSimConfig) -> Result<WTrajectory> {
    if cfg.n == 0 {
        return Err(invalid("n: horizon must be at least 1"));
    }
    if et.empty {
        return Err(Error::Infeasible("no measure is compatible with the target".into()));
    }
    let grid = LiftedGrid::from_etilde(et);
    let restriction = DeltaRestrictedSimplex::for_delta(&grid, cfg.delta)?;
    let (nx, nz) = (grid.nx(), grid.nz());
    if let WStrategy::Fixed(w) = strategy {
        check_weights(w, nx, "fixed strategy")?;
    }
    match adversary {
        WAdversary::Stationary(w) => check_weights(w, nz, "stationary adversary")?,
        WAdversary::Fixed(seq) => {
            if seq.is_empty() {
                return Err(invalid("fixed adversary needs at least one action"));
            }
            for w in seq {
                check_weights(w, nz, "fixed adversary")?;
            }
        }
        _ => {}
    }
    let points = grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(match adversary {
        WAdversary::RandomSeeded(s) => s.wrapping_add(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        _ => cfg.seed,
    });
    let mut theta: Vec<f64> = vec![0.0; grid.len()];
    let mut raw: Vec<f64> = vec![0.0; grid.len()];
    let mut stages = Vec::with_capacity(cfg.n);
    let mut dumps = Vec::new();
    // projection of the current state, reused by the next greedy step
    let mut proj: Option<(DiscreteMeasure, f64)> = None;
    for m in 1..=cfg.n {
        let state = if m == 1 { None } else { Some(DiscreteMeasure::from_parts(points.clone(), theta.clone())) };
        let (xraw, xplay, phi) = match strategy {
            WStrategy::Fixed(w) => {
                let played = if cfg.smooth_both { DeltaRestrictedSimplex::restrict(restriction.lambda_x, w) } else { w.clone() };
                (w.clone(), played, None)
            }
            WStrategy::Greedy => {
                let theta_m = state.clone().unwrap_or_else(|| DiscreteMeasure::from_parts(points.clone(), vec![1.0; grid.len()]));
                let (q, c) = match proj.take() {
                    Some(pc) => pc,
                    None => et.project(&theta_m)?,
                };
                let ch = greedy_from_projection(&grid, &theta_m, q, c, &restriction)?;
                (ch.p, ch.xbar, Some(ch.phi))
            }
        };
        let zraw: Vec<f64> = match adversary {
            WAdversary::Stationary(w) => w.clone(),
            WAdversary::Fixed(seq) => seq[(m - 1) % seq.len()].clone(),
            WAdversary::RandomSeeded(_) => unit(nz, rng.gen_range(0..nz)),
            WAdversary::PotentialMaximin => {
                let phi = match &phi {
                    Some(p) => p.clone(),
                    None => match &state {
                        Some(st) => {
                            let (q, c) = et.project(st)?;
                            if c <= 1e-12 { vec![0.0; grid.len()] } else { w2(st, &q)?.phi }
                        }
                        None => vec![0.0; grid.len()],
                    },
                };
                let mm = restricted_matrix(&grid, &phi, &restriction);
                let sol = matrix_game_value(&mm)?;
                lex_min_maximizer(&mm, sol.lower_value, 1e-9)?
            }
            WAdversary::BestResponse => {
                let mut best: Option<(f64, usize)> = None;
                for j in 0..nz {
                    let zs = DeltaRestrictedSimplex::restrict(restriction.lambda_z, &unit(nz, j));
                    let next = step(&theta, &grid.product(&xplay, &zs), m);
                    let (_, c) = et.project(&DiscreteMeasure::from_parts(points.clone(), next))?;
                    if best.map_or(true, |(bc, _)| c > bc + 1e-12) {
                        best = Some((c, j));
                    }
                }
                unit(nz, best.expect("at least one signal").1)
            }
        };
        let zplay = DeltaRestrictedSimplex::restrict(restriction.lambda_z, &zraw);
        theta = step(&theta, &grid.product(&xplay, &zplay), m);
        raw = step(&raw, &grid.product(&xraw, &zraw), m);
        let current = DiscreteMeasure::from_parts(points.clone(), theta.clone());
        let (q, c) = et.project(&current)?;
        stages.push(WStage { m, w2sq: c, w2: c.max(0.0).sqrt() });
        proj = Some((q, c));
        if cfg.dump_stride > 0 && m % cfg.dump_stride == 0 {
            dumps.push((m, theta.clone()));
        }
    }
    Ok(WTrajectory {
        stages,
        theta: DiscreteMeasure::from_parts(points.clone(), theta),
        theta_raw: DiscreteMeasure::from_parts(points, raw),
        dumps,
    })
}

/// `theta + (outcome - theta) / m`
fn step(theta: &[f64], outcome: &[f64], m: usize) -> Vec<f64> {
    theta.iter().zip(outcome).map(|(t, o)| t + (o - t) / m as f64).collect()
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    v
}

fn check_weights(w: &[f64], n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(dim(format!("{what}: {} weights for {n} grid points", w.len())));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("{what}: weights must be a probability vector")));
    }
    Ok(())
}
