//! Shuffle-of-Min approximation of arbitrary copulas.
//!
//! A copula is first discretized into the checkerboard of its cell volumes on
//! an `m x m` grid. Each cell `(i, j)` of positive mass then becomes one
//! increasing strip of that width: inside column `i` the strips are stacked
//! by `j`, inside row `j` by `i`. The resulting shuffle puts exactly the cell
//! mass into every cell, so it agrees with the copula at all grid corners and
//! the uniform distance is at most `2/m`.

use std::sync::Arc;

use crate::copula::{Checkerboard, Copula, ShuffleOfMin};
use crate::error::Result;

/// Largest `m` for which the checkerboard is tabulated; beyond it cell masses
/// are read from the copula on demand.
pub const TABLE_LIMIT: usize = 1024;

/// Default lattice size for [`sup_distance`].
pub const DEFAULT_GRID: usize = 400;

/// Cell volumes of `spec` on the `m x m` grid.
pub fn extract_checkerboard(spec: &Copula, m: usize) -> Result<Checkerboard> {
    let m = m.max(1);
    let pt = |k: usize| k as f64 / m as f64;
    let corners: Vec<Vec<f64>> = (0..=m)
        .map(|i| (0..=m).map(|j| spec.cdf(pt(i), pt(j))).collect())
        .collect();
    let mut masses = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let vol = corners[i + 1][j + 1] - corners[i][j + 1] - corners[i + 1][j]
                + corners[i][j];
            // cancellation can leave -1e-17 on empty cells
            masses.push(vol.max(0.0));
        }
    }
    Checkerboard::new(m, masses)
}

/// Shuffle placing mass `cb.mass(i, j)` on an increasing strip inside cell `(i, j)`.
pub fn shuffle_from_checkerboard(cb: Arc<Checkerboard>) -> ShuffleOfMin {
    ShuffleOfMin::from_checkerboard(cb)
}

/// Shuffle of Min within uniform distance `2/m` of `spec`.
pub fn approximate_by_shuffle(spec: &Copula, m: usize) -> Result<ShuffleOfMin> {
    if m <= TABLE_LIMIT {
        let cb = extract_checkerboard(spec, m)?;
        Ok(shuffle_from_checkerboard(Arc::new(cb)))
    } else {
        ShuffleOfMin::from_copula_grid(spec.clone(), m)
    }
}

/// Largest `|C_a - C_b|` over the lattice `{k/(grid-1)}²`.
///
/// This is a lower bound for the uniform distance; both copulas are
/// 2-Lipschitz, so it undershoots by at most `2/(grid-1)`.
pub fn sup_distance(a: &Copula, b: &Copula, grid: usize) -> f64 {
    lattice_max(a, b, grid).0
}

/// [`sup_distance`] followed by `levels` rounds of local refinement: each round
/// re-samples the two lattice cells around the current maximizer with a
/// `grid x grid` lattice.
pub fn sup_distance_refined(a: &Copula, b: &Copula, grid: usize, levels: usize) -> f64 {
    let (mut best, mut at) = lattice_max(a, b, grid);
    let grid = grid.max(2);
    let mut half = 1.0 / (grid - 1) as f64;
    for _ in 0..levels {
        let (u0, v0) = at;
        let step = 2.0 * half / (grid - 1) as f64;
        for k in 0..grid {
            let u = (u0 - half + k as f64 * step).clamp(0.0, 1.0);
            for l in 0..grid {
                let v = (v0 - half + l as f64 * step).clamp(0.0, 1.0);
                let d = (a.cdf(u, v) - b.cdf(u, v)).abs();
                if d > best {
                    best = d;
                    at = (u, v);
                }
            }
        }
        half = step;
    }
    best
}

fn lattice_max(a: &Copula, b: &Copula, grid: usize) -> (f64, (f64, f64)) {
    let grid = grid.max(2);
    let pt = |k: usize| k as f64 / (grid - 1) as f64;
    let mut best = 0.0;
    let mut at = (0.0, 0.0);
    for k in 0..grid {
        let u = pt(k);
        for l in 0..grid {
            let v = pt(l);
            let d = (a.cdf(u, v) - b.cdf(u, v)).abs();
            if d > best {
                best = d;
                at = (u, v);
            }
        }
    }
    (best, at)
}
