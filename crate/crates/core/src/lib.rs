//! Bounded mean oscillation on dyadic grids.
//!
//! Functions are piecewise constant on the finest cells of a dyadic
//! subdivision of a cube in `R^n`, so every average and oscillation below is
//! an exact finite sum. On top of that the crate provides
//!
//! * the dyadic BMO seminorm and distribution-set measures ([`oscillation`]),
//! * the stopping-time cube decomposition and a checker for the bounds it
//!   guarantees ([`decomposition`]),
//! * the John–Nirenberg distribution bound and its verification ([`jn`]),
//! * exponential integrability ([`integrability`]),
//! * H¹ atoms and the pairing with BMO ([`duality`]).

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod duality;
pub mod error;
pub mod grid;
pub mod integrability;
pub mod jn;
pub mod lattice;
pub mod oscillation;

pub use decomposition::{
    check_features, decompose, Decomposition, FeatureCheck, FeatureReport, SelectedCube,
    DEFAULT_THETA,
};
pub use duality::{
    duality_report, functional_apply, make_haar_atom, pair, Atom, AtomKind, AtomicSum,
    DualityReport,
};
pub use error::{BmoError, Result};
pub use grid::{GeneratorKind, GridFunction, GridShape};
pub use integrability::{exp_mean, exp_sweep, layer_cake_bound, ExpIntegralReport};
pub use jn::{containment_check, jn_bound, verify_jn, ContainmentReport, JnReport};
pub use lattice::{DyadicCube, RootCube};
pub use oscillation::{bmo_seminorm, distribution_measure, BmoNorm};
