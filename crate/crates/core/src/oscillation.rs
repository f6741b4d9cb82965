//! Dyadic BMO seminorm and distribution-set measures.

use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::grid::GridFunction;
use crate::lattice::{ancestor_flat, DyadicCube};

/// Supremum of mean oscillation over every dyadic cube of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoNorm {
    pub value: f64,
    pub argmax_cube: DyadicCube,
}

/// Per-level cube sums, finest level first is `sums[levels]`.
pub(crate) fn level_sums(f: &GridFunction) -> Vec<Vec<f64>> {
    let n = f.dimension();
    let levels = f.levels();
    let mut sums = vec![Vec::new(); levels as usize + 1];
    sums[levels as usize] = f.values().to_vec();
    for level in (0..levels).rev() {
        let finer = &sums[level as usize + 1];
        let mut coarse = vec![0.0; 1usize << (n as u32 * level)];
        for (flat, &s) in finer.iter().enumerate() {
            coarse[ancestor_flat(flat as u64, n, level + 1, level) as usize] += s;
        }
        sums[level as usize] = coarse;
    }
    sums
}

/// Dyadic BMO seminorm.
///
/// Cube sums are accumulated bottom-up through the subdivision tree; each
/// level then needs one sweep over the cells to collect `Σ|φ - avg|` per
/// cube, so the cost is `O(N (L + 1))` for `N` cells. Ties go to the
/// coarsest cube, then the smallest lexicographic index.
pub fn bmo_seminorm(f: &GridFunction) -> BmoNorm {
    let n = f.dimension();
    let levels = f.levels();
    let sums = level_sums(f);
    let mut best = BmoNorm {
        value: 0.0,
        argmax_cube: DyadicCube::root(n),
    };
    for level in 0..=levels {
        let per_cube = (1u64 << (n as u32 * (levels - level))) as f64;
        let averages: Vec<f64> = sums[level as usize].iter().map(|s| s / per_cube).collect();
        let mut deviation = vec![0.0; averages.len()];
        for (flat, &v) in f.values().iter().enumerate() {
            let q = ancestor_flat(flat as u64, n, levels, level) as usize;
            deviation[q] += (v - averages[q]).abs();
        }
        for (q, d) in deviation.iter().enumerate() {
            let osc = d / per_cube;
            if osc > best.value {
                best = BmoNorm {
                    value: osc,
                    argmax_cube: DyadicCube::from_flat(n, level, q as u64),
                };
            }
        }
    }
    best
}

/// Seminorm value, or [`BmoError::ZeroNorm`] for functions with no
/// oscillation at all.
pub fn nonzero_seminorm(f: &GridFunction) -> Result<BmoNorm> {
    let norm = bmo_seminorm(f);
    if norm.value > 0.0 {
        Ok(norm)
    } else {
        Err(BmoError::ZeroNorm)
    }
}

/// Measure of `{x in c : |φ(x) - avg_c φ| > α}`.
pub fn distribution_measure(f: &GridFunction, cube: &DyadicCube, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(BmoError::invalid(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let avg = f.cube_average(cube)?;
    let count = f
        .shape()
        .cells(cube)?
        .filter(|&i| (f.values()[i] - avg).abs() > alpha)
        .count();
    Ok(count as f64 * f.shape().cell_volume())
}

/// Deviations `|φ - avg_c φ|` on the cells of `c`, sorted ascending. Lets a
/// whole α-sweep reuse one pass over the cube.
pub(crate) fn sorted_deviations(f: &GridFunction, cube: &DyadicCube) -> Result<Vec<f64>> {
    let avg = f.cube_average(cube)?;
    let mut devs: Vec<f64> = f
        .shape()
        .cells(cube)?
        .map(|i| (f.values()[i] - avg).abs())
        .collect();
    devs.sort_by(f64::total_cmp);
    Ok(devs)
}

/// Number of entries of an ascending slice strictly above `alpha`.
pub(crate) fn count_above(sorted: &[f64], alpha: f64) -> usize {
    sorted.len() - sorted.partition_point(|&d| d <= alpha)
}
