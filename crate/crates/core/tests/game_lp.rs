use approach_core::lp::{solve_lp, LpProblem};
use approach_core::{matrix_game_value, MixedAction, Polytope, TargetSet, VectorGame};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn matrix(a: usize, b: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, b), a)
}

fn game(a: usize, b: usize, d: usize) -> impl Strategy<Value = VectorGame> {
    prop::collection::vec(prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), b), a)
        .prop_map(|p| VectorGame::new(p).unwrap())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn targets() -> Vec<TargetSet> {
    vec![
        TargetSet::half_space(vec![1.0, -2.0], 0.5).unwrap(),
        TargetSet::ball(vec![0.3, -0.2], 0.7).unwrap(),
        TargetSet::polytope(Polytope::boxed(&[0.0, 0.0], &[1.0, 1.0]).unwrap()).unwrap(),
        TargetSet::polytope(
            Polytope::new(vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]], vec![1.0, 0.0, 0.0]).unwrap(),
        )
        .unwrap(),
        TargetSet::union(vec![
            TargetSet::ball(vec![-1.0, -1.0], 0.5).unwrap(),
            TargetSet::ball(vec![1.0, 1.0], 0.25).unwrap(),
        ])
        .unwrap(),
    ]
}

proptest! {
    #[test]
    fn payoff_is_bounded_by_kappa(g in game(3, 2, 2), x in simplex(3), y in simplex(2)) {
        let p = g.payoff(&MixedAction::new(x).unwrap(), &MixedAction::new(y).unwrap()).unwrap();
        prop_assert!(norm(&p) <= g.kappa() + 1e-12);
    }

    #[test]
    fn payoff_is_bilinear(g in game(3, 3, 2), x in simplex(3), x2 in simplex(3), y in simplex(3), lam in 0.0f64..1.0) {
        let (x, x2, y) = (MixedAction::new(x).unwrap(), MixedAction::new(x2).unwrap(), MixedAction::new(y).unwrap());
        let mixed = g.payoff(&x.mix(&x2, lam).unwrap(), &y).unwrap();
        let a = g.payoff(&x, &y).unwrap();
        let b = g.payoff(&x2, &y).unwrap();
        for k in 0..2 {
            prop_assert!((mixed[k] - (lam * a[k] + (1.0 - lam) * b[k])).abs() <= 1e-12);
        }
    }

    #[test]
    fn distance_matches_projection(gx in -3.0f64..3.0, gy in -3.0f64..3.0) {
        let g = [gx, gy];
        for t in targets() {
            let p = t.project(&g);
            let gap: Vec<f64> = g.iter().zip(&p).map(|(a, b)| a - b).collect();
            prop_assert!((norm(&gap) - t.distance(&g)).abs() <= 1e-9);
            prop_assert!(t.distance(&p) <= 1e-9);
        }
    }

    #[test]
    fn distance_is_one_lipschitz(a in prop::array::uniform2(-3.0f64..3.0), b in prop::array::uniform2(-3.0f64..3.0)) {
        let ab = norm(&[a[0] - b[0], a[1] - b[1]]);
        for t in targets() {
            prop_assert!((t.distance(&a) - t.distance(&b)).abs() <= ab + 1e-12);
        }
    }

    #[test]
    fn lp_strong_duality(
        a in prop::collection::vec(prop::collection::vec(0.1f64..1.0, 4), 3),
        b in prop::collection::vec(1.0f64..3.0, 3),
        c in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mut lp = LpProblem::minimize(c.clone());
        for (row, rhs) in a.iter().zip(&b) {
            lp.leq(row.clone(), *rhs);
        }
        lp.equal(vec![1.0; 4], 1.0);
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        let dual = b.iter().zip(&sol.dual_ub).map(|(r, y)| r * y).sum::<f64>() + sol.dual_eq[0];
        prop_assert!((sol.objective - dual).abs() <= 1e-8);
        for j in 0..4 {
            let lhs: f64 = (0..3).map(|i| a[i][j] * sol.dual_ub[i]).sum::<f64>() + sol.dual_eq[0];
            prop_assert!(lhs <= c[j] + 1e-9);
        }
        prop_assert!(sol.dual_ub.iter().all(|y| *y <= 1e-12));
    }

    #[test]
    fn negated_transpose_swaps_roles(m in matrix(3, 4)) {
        let t: Vec<Vec<f64>> = (0..4).map(|j| (0..3).map(|i| -m[i][j]).collect()).collect();
        let v = matrix_game_value(&m).unwrap();
        let w = matrix_game_value(&t).unwrap();
        prop_assert!((v.value + w.value).abs() <= 1e-9);
    }

    #[test]
    fn shift_moves_the_value_and_keeps_strategies(m in matrix(3, 3), c in -2.0f64..2.0) {
        let shifted: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let v = matrix_game_value(&m).unwrap();
        let s = matrix_game_value(&shifted).unwrap();
        prop_assert!((s.value - v.value - c).abs() <= 1e-9);
        let (x, y) = (s.xstar.weights(), s.ystar.weights());
        let worst_col = (0..3).map(|j| (0..3).map(|i| x[i] * m[i][j]).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        let worst_row = (0..3).map(|i| (0..3).map(|j| m[i][j] * y[j]).sum::<f64>()).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_col <= v.value + 1e-8);
        prop_assert!(worst_row >= v.value - 1e-8);
    }
}

#[test]
fn reference_game_matches_exhaustive_search() {
    let m = vec![vec![3.0, 1.0], vec![0.0, 2.0]];
    let sol = matrix_game_value(&m).unwrap();
    assert!((sol.value - 1.5).abs() < 1e-12);
    assert!((sol.xstar.weights()[0] - 0.5).abs() < 1e-12);
    assert!((sol.ystar.weights()[0] - 0.25).abs() < 1e-12);
    // min over x of the worst column, x on a 1e-3 grid
    let best = (0..=1000)
        .map(|i| {
            let p = i as f64 / 1000.0;
            (3.0 * p).max(p + 2.0 * (1.0 - p))
        })
        .fold(f64::INFINITY, f64::min);
    assert!((best - sol.value).abs() <= 1e-3);
}
