//! Dyadic cube addressing.
//!
//! A cube is identified by its level `ℓ` and an integer index vector `k`
//! with `0 <= k_i < 2^ℓ`. Geometrically it is the half-open box
//! `origin + side * [k_i 2^-ℓ, (k_i + 1) 2^-ℓ)` along every axis, so the
//! cubes of one level tile the root exactly. Identity and containment are
//! decided on the integer address alone.

use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};

/// The axis-aligned cube all dyadic cubes are carved from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCube {
    dimension: usize,
    origin: Vec<f64>,
    side: f64,
}

impl RootCube {
    pub fn new(origin: Vec<f64>, side: f64) -> Result<Self> {
        if origin.is_empty() {
            return Err(BmoError::invalid("root cube dimension must be at least 1"));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(BmoError::invalid(format!(
                "root cube side must be positive and finite, got {side}"
            )));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(BmoError::invalid("root cube origin must be finite"));
        }
        Ok(RootCube {
            dimension: origin.len(),
            origin,
            side,
        })
    }

    /// The unit cube `[0, 1)^n`.
    pub fn unit(dimension: usize) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        RootCube {
            dimension,
            origin: vec![0.0; dimension],
            side: 1.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Lebesgue measure of the root, `side^n`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dimension as i32)
    }

    /// Volume of a dyadic cube, `side^n * 2^(-n ℓ)`.
    pub fn volume_of(&self, cube: &DyadicCube) -> f64 {
        self.volume() * dyadic_scale(self.dimension as u32 * cube.level)
    }

    /// Lower corner and side length of a cube in root coordinates.
    pub fn bounds_of(&self, cube: &DyadicCube) -> (Vec<f64>, f64) {
        let edge = self.side * dyadic_scale(cube.level);
        let lower = self
            .origin
            .iter()
            .zip(&cube.index)
            .map(|(o, &k)| o + edge * k as f64)
            .collect();
        (lower, edge)
    }

    /// The cube at level 0.
    pub fn top(&self) -> DyadicCube {
        DyadicCube::root(self.dimension)
    }

    /// All cubes at `level`, in lexicographic index order (last axis fastest).
    pub fn cubes_at_level(&self, level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        let count = 1u64 << (self.dimension as u32 * level);
        (0..count).map(move |flat| DyadicCube::from_flat(self.dimension, level, flat))
    }
}

/// `2^-k` computed exactly.
pub(crate) fn dyadic_scale(k: u32) -> f64 {
    2f64.powi(-(k as i32))
}

/// Address of a dyadic subcube of a [`RootCube`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<u64>,
}

impl DyadicCube {
    pub fn new(level: u32, index: Vec<u64>) -> Result<Self> {
        if index.is_empty() {
            return Err(BmoError::invalid("cube index must have at least one axis"));
        }
        if level >= 64 {
            return Err(BmoError::invalid(format!("cube level {level} is too deep")));
        }
        let bound = 1u64 << level;
        if let Some(k) = index.iter().find(|&&k| k >= bound) {
            return Err(BmoError::invalid(format!(
                "cube index component {k} out of range for level {level}"
            )));
        }
        Ok(DyadicCube { level, index })
    }

    pub fn root(dimension: usize) -> Self {
        DyadicCube {
            level: 0,
            index: vec![0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.index.len()
    }

    /// The `2^n` subcubes one level down, in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dimension();
        (0..1u64 << n)
            .map(|mask| {
                let index = self
                    .index
                    .iter()
                    .enumerate()
                    .map(|(axis, &k)| 2 * k + ((mask >> (n - 1 - axis)) & 1))
                    .collect();
                DyadicCube {
                    level: self.level + 1,
                    index,
                }
            })
            .collect()
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        (self.level > 0).then(|| DyadicCube {
            level: self.level - 1,
            index: self.index.iter().map(|k| k >> 1).collect(),
        })
    }

    /// The ancestor at `level` (or `self` when the levels agree).
    pub fn ancestor(&self, level: u32) -> Option<DyadicCube> {
        (level <= self.level).then(|| {
            let shift = self.level - level;
            DyadicCube {
                level,
                index: self.index.iter().map(|k| k >> shift).collect(),
            }
        })
    }

    /// Whether `inner` lies inside `self`. Reflexive.
    pub fn contains(&self, inner: &DyadicCube) -> bool {
        inner.dimension() == self.dimension()
            && inner
                .ancestor(self.level)
                .is_some_and(|a| a.index == self.index)
    }

    /// Position of this cube among the cubes of its level, lexicographic
    /// with the last axis varying fastest.
    pub fn flat_index(&self) -> u64 {
        self.index
            .iter()
            .fold(0u64, |acc, &k| (acc << self.level) | k)
    }

    pub fn from_flat(dimension: usize, level: u32, flat: u64) -> DyadicCube {
        let mask = (1u64 << level) - 1;
        let index = (0..dimension)
            .map(|axis| (flat >> ((dimension - 1 - axis) as u32 * level)) & mask)
            .collect();
        DyadicCube { level, index }
    }
}

/// Flat index, at `to_level`, of the ancestor of the cube with flat index
/// `flat` at `from_level`.
pub(crate) fn ancestor_flat(flat: u64, dimension: usize, from_level: u32, to_level: u32) -> u64 {
    debug_assert!(to_level <= from_level);
    let shift = from_level - to_level;
    let mask = (1u64 << from_level) - 1;
    (0..dimension).fold(0u64, |acc, axis| {
        let field = (flat >> ((dimension - 1 - axis) as u32 * from_level)) & mask;
        (acc << to_level) | (field >> shift)
    })
}
