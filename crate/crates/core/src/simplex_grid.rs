//! Regular grids on the probability simplex.

use crate::game::MixedAction;

/// All weight vectors over `n` actions whose entries are multiples of
/// `1 / (resolution - 1)`, in ascending lexicographic order. Vertices are always
/// included since `resolution >= 2`.
pub fn simplex_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    assert!(n >= 1 && resolution >= 2, "simplex grid needs n >= 1 and resolution >= 2");
    let steps = resolution - 1;
    let mut out = Vec::new();
    let mut counts = vec![0usize; n];
    fill(&mut counts, 0, steps, steps, &mut out);
    out
}

fn fill(counts: &mut [usize], pos: usize, left: usize, steps: usize, out: &mut Vec<Vec<f64>>) {
    let n = counts.len();
    if pos == n - 1 {
        counts[pos] = left;
        out.push(counts.iter().map(|&c| c as f64 / steps as f64).collect());
        return;
    }
    for c in 0..=left {
        counts[pos] = c;
        fill(counts, pos + 1, left - c, steps, out);
    }
}

/// Number of points produced by [`simplex_grid`].
pub fn simplex_grid_len(n: usize, resolution: usize) -> usize {
    // C(steps + n - 1, n - 1)
    let steps = resolution - 1;
    let mut r: u128 = 1;
    for k in 0..(n - 1) {
        r = r * (steps + n - 1 - k) as u128 / (k + 1) as u128;
    }
    r as usize
}

pub fn grid_actions(n: usize, resolution: usize) -> Vec<MixedAction> {
    simplex_grid(n, resolution).into_iter().map(MixedAction::from_weights_unchecked).collect()
}

/// Index order visiting the grid vertices first, then everything else in
/// lexicographic order.
pub fn vertices_first(grid: &[Vec<f64>]) -> Vec<usize> {
    let is_vertex = |w: &Vec<f64>| w.iter().any(|&v| v == 1.0);
    let mut order: Vec<usize> = (0..grid.len()).filter(|&i| is_vertex(&grid[i])).collect();
    order.extend((0..grid.len()).filter(|&i| !is_vertex(&grid[i])));
    order
}
