//! John–Nirenberg distribution inequality
//!
//! `|{x in Q : |φ - avg_Q φ| > α}| <= e |Q| exp(-α / (2^n e ‖φ‖))`
//!
//! checked against exact cell counts, plus the covering of high level sets
//! by the stopping-time generations that the inequality rests on.

use serde::Serialize;

use crate::decomposition::Decomposition;
use crate::error::{BmoError, Result};
use crate::grid::GridFunction;
use crate::lattice::DyadicCube;
use crate::oscillation::{count_above, nonzero_seminorm, sorted_deviations};

/// Relative arithmetic slack on the domination test.
pub const DOMINATION_TOL: f64 = 1e-12;

/// Right-hand side of the distribution inequality.
pub fn jn_bound(volume: f64, alpha: f64, norm: f64, dimension: usize) -> Result<f64> {
    if !(norm > 0.0) {
        return Err(BmoError::invalid(format!(
            "norm must be positive, got {norm}"
        )));
    }
    if !(volume > 0.0) {
        return Err(BmoError::invalid(format!(
            "volume must be positive, got {volume}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(BmoError::invalid(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let e = std::f64::consts::E;
    let scale = (1u64 << dimension) as f64 * e * norm;
    Ok(e * volume * (-alpha / scale).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JnReport {
    pub cube: DyadicCube,
    pub norm: f64,
    pub alphas: Vec<f64>,
    pub empirical: Vec<f64>,
    pub bound: Vec<f64>,
    pub dominated: bool,
    /// Largest `empirical / bound` over the sweep.
    pub max_ratio: f64,
}

impl JnReport {
    /// `alpha,empirical,bound` rows with a header line.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("alpha,empirical,bound\n");
        for ((a, m), b) in self.alphas.iter().zip(&self.empirical).zip(&self.bound) {
            out.push_str(&format!("{a:?},{m:?},{b:?}\n"));
        }
        out
    }
}

/// Sweeps `α = α_max · i / steps` for `i = 1..=steps`.
pub fn verify_jn(
    f: &GridFunction,
    cube: &DyadicCube,
    alpha_max: f64,
    steps: usize,
) -> Result<JnReport> {
    if !(alpha_max > 0.0 && alpha_max.is_finite()) {
        return Err(BmoError::invalid(format!(
            "alpha_max must be positive and finite, got {alpha_max}"
        )));
    }
    if steps == 0 {
        return Err(BmoError::invalid("steps must be at least 1"));
    }
    let norm = nonzero_seminorm(f)?.value;
    let volume = f.root().volume_of(cube);
    let cell_volume = f.shape().cell_volume();
    let deviations = sorted_deviations(f, cube)?;

    let mut report = JnReport {
        cube: cube.clone(),
        norm,
        alphas: Vec::with_capacity(steps),
        empirical: Vec::with_capacity(steps),
        bound: Vec::with_capacity(steps),
        dominated: true,
        max_ratio: 0.0,
    };
    for i in 1..=steps {
        let alpha = alpha_max * i as f64 / steps as f64;
        let measure = count_above(&deviations, alpha) as f64 * cell_volume;
        let bound = jn_bound(volume, alpha, norm, f.dimension())?;
        if measure > bound * (1.0 + DOMINATION_TOL) {
            report.dominated = false;
        }
        if bound > 0.0 {
            report.max_ratio = report.max_ratio.max(measure / bound);
        }
        report.alphas.push(alpha);
        report.empirical.push(measure);
        report.bound.push(bound);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub lambda: usize,
    /// `λ 2^n θ + θ`, in units of the seminorm.
    pub threshold: f64,
    pub passed: bool,
    /// `threshold` minus the largest deviation found outside generation λ.
    pub slack: f64,
    /// The compact threshold `2^n λ θ`.
    pub compact_threshold: f64,
    pub compact_passed: bool,
    pub compact_slack: f64,
}

/// Whether every cell whose normalized deviation from the root average
/// exceeds the threshold lies in the union of generation `lambda`.
pub fn containment_check(
    f: &GridFunction,
    d: &Decomposition,
    lambda: usize,
) -> Result<ContainmentReport> {
    if lambda > d.max_generation() {
        return Err(BmoError::invalid(format!(
            "generation {lambda} out of range 0..={}",
            d.max_generation()
        )));
    }
    f.shape().check_cube(&d.root)?;
    let shape = f.shape();
    let covered = d.covered_cells(shape, lambda)?;
    let root_avg = f.cube_average(&d.root)? / d.normalization;
    let fanout = (1u64 << f.dimension()) as f64;
    let threshold = lambda as f64 * fanout * d.theta + d.theta;
    let compact_threshold = fanout * lambda as f64 * d.theta;

    let worst = shape
        .cells(&d.root)?
        .filter(|&i| !covered[i])
        .map(|i| (f.values()[i] / d.normalization - root_avg).abs())
        .fold(0.0f64, f64::max);
    Ok(ContainmentReport {
        lambda,
        threshold,
        passed: worst <= threshold,
        slack: threshold - worst,
        compact_threshold,
        compact_passed: worst <= compact_threshold,
        compact_slack: compact_threshold - worst,
    })
}
