//! Exponential integrability of BMO functions.
//!
//! Integrating the distribution bound against `ζ' e^{ζ' t}` (layer-cake
//! formula, `ζ' = ζ / ‖φ‖`) gives
//!
//! `(1/|Q|) ∫_Q exp(ζ |φ - avg_Q φ| / ‖φ‖) <= 1 + e q / (1 - q)`, `q = 2^n e ζ`,
//!
//! finite exactly when `ζ < 1 / (2^n e)`.

use serde::Serialize;

use crate::error::{BmoError, Result};
use crate::grid::GridFunction;
use crate::lattice::DyadicCube;
use crate::oscillation::nonzero_seminorm;

/// Additive slack on the domination test.
pub const EXP_TOL: f64 = 1e-9;

/// The largest admissible `ζ` (exclusive) in dimension `n`.
pub fn admissible_limit(dimension: usize) -> f64 {
    1.0 / ((1u64 << dimension) as f64 * std::f64::consts::E)
}

/// `(1/|c|) ∫_c exp(ζ |φ - avg_c φ| / ‖φ‖)`.
pub fn exp_mean(f: &GridFunction, cube: &DyadicCube, zeta: f64) -> Result<f64> {
    let norm = nonzero_seminorm(f)?.value;
    exp_mean_with_norm(f, cube, zeta, norm)
}

fn exp_mean_with_norm(f: &GridFunction, cube: &DyadicCube, zeta: f64, norm: f64) -> Result<f64> {
    if !zeta.is_finite() {
        return Err(BmoError::invalid(format!(
            "zeta must be finite, got {zeta}"
        )));
    }
    let avg = f.cube_average(cube)?;
    let count = 1u64 << (f.dimension() as u32 * (f.levels() - cube.level));
    let sum: f64 = f
        .shape()
        .cells(cube)?
        .map(|i| (zeta * (f.values()[i] - avg).abs() / norm).exp())
        .sum();
    Ok(sum / count as f64)
}

/// `1 + e q / (1 - q)` with `q = 2^n e ζ`.
pub fn layer_cake_bound(zeta: f64, dimension: usize) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(BmoError::invalid(format!(
            "zeta must be non-negative, got {zeta}"
        )));
    }
    let limit = admissible_limit(dimension);
    if zeta >= limit {
        return Err(BmoError::Divergent {
            zeta,
            threshold: limit,
        });
    }
    let q = zeta / limit;
    Ok(1.0 + std::f64::consts::E * q / (1.0 - q))
}

/// The same constant written as `1 - 2^n e² ζ / (2^n e ζ - 1)`.
pub fn alternate_closed_form(zeta: f64, dimension: usize) -> f64 {
    let e = std::f64::consts::E;
    let two_n = (1u64 << dimension) as f64;
    1.0 - two_n * e * e * zeta / (two_n * e * zeta - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpIntegralReport {
    pub zeta: f64,
    pub lhs: f64,
    /// `None` outside the admissible range.
    pub bound: Option<f64>,
    pub alternate_form: Option<f64>,
    pub admissible: bool,
}

impl ExpIntegralReport {
    /// `lhs <= bound + EXP_TOL`; vacuous when `ζ` is not admissible.
    pub fn dominated(&self) -> bool {
        self.bound.is_none_or(|b| self.lhs <= b + EXP_TOL)
    }
}

/// One report per `ζ` in `zetas`.
pub fn exp_sweep(
    f: &GridFunction,
    cube: &DyadicCube,
    zetas: &[f64],
) -> Result<Vec<ExpIntegralReport>> {
    let norm = nonzero_seminorm(f)?.value;
    zetas
        .iter()
        .map(|&zeta| {
            let lhs = exp_mean_with_norm(f, cube, zeta, norm)?;
            let admissible = zeta >= 0.0 && zeta < admissible_limit(f.dimension());
            let bound = admissible
                .then(|| layer_cake_bound(zeta, f.dimension()))
                .transpose()?;
            Ok(ExpIntegralReport {
                zeta,
                lhs,
                bound,
                alternate_form: admissible.then(|| alternate_closed_form(zeta, f.dimension())),
                admissible,
            })
        })
        .collect()
}

/// `zeta,lhs,bound,admissible` rows; an inadmissible bound prints as `inf`.
pub fn sweep_to_csv(rows: &[ExpIntegralReport]) -> String {
    let mut out = String::from("zeta,lhs,bound,admissible\n");
    for r in rows {
        let bound = r
            .bound
            .map_or_else(|| "inf".to_string(), |b| format!("{b:?}"));
        out.push_str(&format!(
            "{:?},{:?},{},{}\n",
            r.zeta, r.lhs, bound, r.admissible
        ));
    }
    out
}
