use approach_core::pm::{build_etilde, SignalStructure};
use approach_core::simplex_grid::grid_actions;
use approach_core::transport::w2;
use approach_core::wgame::{
    greedy_step, run_wsim, w_hamiltonian, DeltaRestrictedSimplex, LiftedGrid, WAdversary, WSimConfig, WStrategy,
};
use approach_core::{matrix_game_value, DiscreteMeasure, TargetSet, VectorGame};
use proptest::prelude::*;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn diam(ps: &[Vec<f64>]) -> f64 {
    ps.iter().flat_map(|a| ps.iter().map(move |b| dist(a, b))).fold(0.0, f64::max)
}

fn reference_etilde() -> approach_core::pm::EtildePolytope {
    let game = VectorGame::scalar(vec![vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
    let e = TargetSet::half_space(vec![1.0], 2.0).unwrap();
    build_etilde(&game, &e, &grid_actions(2, 3), &SignalStructure::full_monitoring(2)).unwrap()
}

fn smooth(lambda: f64, p: &[f64]) -> Vec<f64> {
    p.iter().map(|w| (1.0 - lambda) * w + lambda / p.len() as f64).collect()
}

#[test]
fn stage_average_is_the_smoothed_product_mean() {
    let et = reference_etilde();
    let grid = LiftedGrid::from_etilde(&et);
    let delta = 0.3;
    let (dx, dz) = (diam(&grid.xs), diam(&grid.zs));
    let lambda = (delta * delta / (dx * dx + dz * dz)).min(1.0);
    let x = vec![0.2, 0.5, 0.3];
    let zs = vec![vec![1.0, 0.0], vec![0.25, 0.75], vec![0.0, 1.0]];
    let n = 7;
    let cfg = WSimConfig { n, delta, seed: 0, smooth_both: true, dump_stride: 0 };
    let tr = run_wsim(&et, &WStrategy::Fixed(x.clone()), &WAdversary::Fixed(zs.clone()), &cfg).unwrap();
    let mut played = vec![0.0; grid.len()];
    let mut raw = vec![0.0; grid.len()];
    for m in 0..n {
        let z = &zs[m % zs.len()];
        let (xs, zsm) = (smooth(lambda, &x), smooth(lambda, z));
        for a in 0..3 {
            for b in 0..2 {
                played[a * 2 + b] += xs[a] * zsm[b] / n as f64;
                raw[a * 2 + b] += x[a] * z[b] / n as f64;
            }
        }
    }
    for (got, want) in tr.theta.weights().iter().zip(&played) {
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
    for (got, want) in tr.theta_raw.weights().iter().zip(&raw) {
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn smoothed_average_stays_within_delta_of_the_raw_average() {
    let et = reference_etilde();
    for delta in [0.05, 0.2] {
        for adv in [WAdversary::BestResponse, WAdversary::PotentialMaximin, WAdversary::RandomSeeded(3)] {
            let cfg = WSimConfig { n: 60, delta, seed: 1, smooth_both: true, dump_stride: 0 };
            let tr = run_wsim(&et, &WStrategy::Greedy, &adv, &cfg).unwrap();
            let d = w2(&tr.theta, &tr.theta_raw).unwrap().w2();
            assert!(d <= delta + 1e-9, "{} delta {delta}: {d}", adv.name());
        }
    }
}

#[test]
fn greedy_avoids_rows_outside_the_target() {
    let et = reference_etilde();
    let grid = LiftedGrid::from_etilde(&et);
    let pure_top = grid.xs.iter().position(|x| x == &vec![1.0, 0.0]).unwrap();
    let mut w = vec![0.0; grid.len()];
    w[pure_top * grid.nz()] = 1.0;
    let theta = grid.measure(w).unwrap();
    let ch = greedy_step(&grid, &theta, &et, &DeltaRestrictedSimplex::NONE).unwrap();
    assert!(ch.cost > 0.0);
    // worst-column payoff of x = (a, 1 - a) is max(3a, 2 - a); rows above 2 must get no weight
    for (i, x) in grid.xs.iter().enumerate() {
        if (3.0 * x[0]).max(2.0 - x[0]) > 2.0 + 1e-12 {
            assert_eq!(ch.p[i], 0.0, "row {x:?}");
        }
    }
    let m: Vec<Vec<f64>> = (0..grid.nx()).map(|i| (0..grid.nz()).map(|j| ch.phi[i * grid.nz() + j]).collect()).collect();
    let v = matrix_game_value(&m).unwrap().value;
    let worst = (0..grid.nz()).map(|j| (0..grid.nx()).map(|i| ch.p[i] * m[i][j]).sum::<f64>()).fold(f64::MIN, f64::max);
    assert!((worst - v).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unrestricted_hamiltonian_matches_grid_search(
        phi in prop::collection::vec(-1.0f64..1.0, 4),
        w in prop::collection::vec(0.01f64..1.0, 4),
        t in 0.2f64..1.0,
    ) {
        let grid = LiftedGrid::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0], vec![1.0]]).unwrap();
        let s: f64 = w.iter().sum();
        let theta = DiscreteMeasure::new(grid.points(), w.iter().map(|v| v / s).collect()).unwrap();
        let h = w_hamiltonian(&grid, t, &theta, &phi, &DeltaRestrictedSimplex::NONE).unwrap();
        let base = theta.integrate(&phi);
        let mut upper = f64::INFINITY;
        for i in 0..=100 {
            let a = i as f64 / 100.0;
            let mut worst = f64::NEG_INFINITY;
            for j in 0..=100 {
                let b = j as f64 / 100.0;
                let val = a * b * phi[0] + a * (1.0 - b) * phi[1] + (1.0 - a) * b * phi[2] + (1.0 - a) * (1.0 - b) * phi[3];
                worst = worst.max(val);
            }
            upper = upper.min(worst);
        }
        let brute = (upper - base) / t;
        prop_assert!((h.upper - brute).abs() <= 2e-2, "lp {} grid {}", h.upper, brute);
        prop_assert!((h.upper - h.lower).abs() <= 1e-8);
    }
}
