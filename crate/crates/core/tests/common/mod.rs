//! Independent oracles and the shared generator suite.
//!
//! Nothing here goes through the crate's cube iterators or tree pass: cells
//! are decoded from their flat position by hand and grouped into dyadic
//! cubes by integer division of their coordinates.

#![allow(dead_code)]

use std::collections::BTreeMap;

use bmo_core::{GeneratorKind, GridFunction, GridShape, RootCube};

/// Per-axis integer coordinates of a flat cell index (last axis fastest).
pub fn cell_coords(flat: usize, n: usize, levels: u32) -> Vec<u64> {
    let side = 1usize << levels;
    let mut rest = flat;
    let mut coords = vec![0u64; n];
    for axis in (0..n).rev() {
        coords[axis] = (rest % side) as u64;
        rest /= side;
    }
    coords
}

/// Values of every dyadic cube at `level`, keyed by cube index.
pub fn cubes_at(f: &GridFunction, level: u32) -> BTreeMap<Vec<u64>, Vec<f64>> {
    let n = f.dimension();
    let levels = f.levels();
    let width = 1u64 << (levels - level);
    let mut groups: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    for (flat, &v) in f.values().iter().enumerate() {
        let key = cell_coords(flat, n, levels)
            .iter()
            .map(|c| c / width)
            .collect();
        groups.entry(key).or_default().push(v);
    }
    groups
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn oscillation(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).abs()).sum::<f64>() / values.len() as f64
}

/// Exhaustive supremum of mean oscillation over every dyadic cube.
pub fn oracle_bmo(f: &GridFunction) -> f64 {
    (0..=f.levels())
        .flat_map(|l| cubes_at(f, l).into_values().map(|vals| oscillation(&vals)))
        .fold(0.0, f64::max)
}

/// Cell-counting distribution measure for one cube.
pub fn oracle_measure(f: &GridFunction, level: u32, index: &[u64], alpha: f64) -> f64 {
    let groups = cubes_at(f, level);
    let vals = &groups[index];
    let m = mean(vals);
    let cell_volume = f.root().volume() / f.values().len() as f64;
    vals.iter().filter(|v| (*v - m).abs() > alpha).count() as f64 * cell_volume
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) panels.
pub fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut acc = g(a) + g(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(a + h * i as f64);
    }
    acc * h / 3.0
}

/// `1 + ζ' ∫_0^∞ e^{ζ' t} (e exp(-t / (2^n e ‖φ‖))) dt` by quadrature, with
/// `ζ' = ζ / ‖φ‖`; the distribution tail is taken per unit volume.
pub fn quadrature_exp_bound(zeta: f64, n: usize, norm: f64) -> f64 {
    let e = std::f64::consts::E;
    let zp = zeta / norm;
    let scale = (1u64 << n) as f64 * e * norm;
    let rate = 1.0 / scale - zp;
    // growth and tail exponents combined so neither factor overflows
    let integrand = |t: f64| zp * e * (zp * t - t / scale).exp();
    // the tail beyond 60 decay lengths is below e^-60
    let upper = 60.0 / rate;
    1.0 + simpson(integrand, 0.0, upper, 20_000)
}

fn unit(n: usize, levels: u32) -> GridShape {
    GridShape::new(RootCube::unit(n), levels).unwrap()
}

pub fn grid_levels(n: usize) -> u32 {
    if n == 1 {
        10
    } else {
        5
    }
}

pub fn martingale(n: usize, levels: u32, seed: u64) -> GridFunction {
    GridFunction::generate(
        GeneratorKind::DyadicMartingale,
        unit(n, levels),
        &BTreeMap::new(),
        seed,
    )
    .unwrap()
}

/// The non-constant generator suite: step, spike, log singularity and
/// `martingales` seeded martingales, for n = 1 (L = 10) and n = 2 (L = 5).
pub fn suite_with(martingales: u64) -> Vec<(String, GridFunction)> {
    let mut out = Vec::new();
    for n in [1usize, 2] {
        let levels = grid_levels(n);
        for kind in [
            GeneratorKind::Step,
            GeneratorKind::Spike,
            GeneratorKind::LogSingularity,
        ] {
            let f = GridFunction::generate(kind, unit(n, levels), &BTreeMap::new(), 0).unwrap();
            out.push((format!("{kind} n={n}"), f));
        }
        for seed in 0..martingales {
            out.push((
                format!("dyadic_martingale(seed={seed}) n={n}"),
                martingale(n, levels, seed),
            ));
        }
    }
    out
}

pub fn suite() -> Vec<(String, GridFunction)> {
    suite_with(100)
}
