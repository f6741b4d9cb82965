//! Piecewise-constant functions on the finest cells of a dyadic grid.
//!
//! Every integral over a dyadic cube of level `<= L` is an exact finite
//! sum of cell values, so averages and oscillations carry no quadrature
//! error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::error::{BmoError, Result};
use crate::lattice::{dyadic_scale, DyadicCube, RootCube};

/// Largest supported `n * levels`; the grid then has at most 2^32 cells.
pub const MAX_TOTAL_BITS: u32 = 32;

/// Root cube plus grid depth; everything needed to address finest cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridShape {
    root: RootCube,
    levels: u32,
}

impl GridShape {
    pub fn new(root: RootCube, levels: u32) -> Result<Self> {
        if root.dimension() as u64 * levels as u64 > MAX_TOTAL_BITS as u64 {
            return Err(BmoError::invalid(format!(
                "grid with n = {} and levels = {levels} is too large",
                root.dimension()
            )));
        }
        Ok(GridShape { root, levels })
    }

    pub fn root(&self) -> &RootCube {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.root.dimension()
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.dimension() as u32 * self.levels)
    }

    pub fn cell_volume(&self) -> f64 {
        self.root.volume() * dyadic_scale(self.dimension() as u32 * self.levels)
    }

    /// Rejects cubes of the wrong dimension or deeper than the grid.
    pub fn check_cube(&self, cube: &DyadicCube) -> Result<()> {
        if cube.dimension() != self.dimension() {
            return Err(BmoError::ShapeMismatch(format!(
                "cube has {} axes, grid has {}",
                cube.dimension(),
                self.dimension()
            )));
        }
        if cube.level > self.levels {
            return Err(BmoError::CubeTooDeep {
                level: cube.level,
                levels: self.levels,
            });
        }
        Ok(())
    }

    /// Flat indices of the finest cells covered by `cube`.
    pub fn cells(&self, cube: &DyadicCube) -> Result<CellIter> {
        self.check_cube(cube)?;
        let span = 1u64 << (self.levels - cube.level);
        let lower = cube.index.iter().map(|&k| k * span).collect::<Vec<_>>();
        Ok(CellIter {
            current: lower.clone(),
            lower,
            span,
            levels: self.levels,
            done: false,
        })
    }

    /// The finest cell with the given flat index, as a cube.
    pub fn cell_cube(&self, flat: usize) -> DyadicCube {
        DyadicCube::from_flat(self.dimension(), self.levels, flat as u64)
    }

    pub fn cell_midpoint(&self, flat: usize) -> Vec<f64> {
        let (lower, edge) = self.root.bounds_of(&self.cell_cube(flat));
        lower.into_iter().map(|x| x + 0.5 * edge).collect()
    }

    /// All dyadic cubes of levels `0..=max_level`, coarse to fine.
    pub fn cubes_up_to(&self, max_level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..=max_level.min(self.levels)).flat_map(move |l| self.root.cubes_at_level(l))
    }
}

/// Odometer over the finest cells of one cube, last axis fastest.
#[derive(Debug, Clone)]
pub struct CellIter {
    lower: Vec<u64>,
    current: Vec<u64>,
    span: u64,
    levels: u32,
    done: bool,
}

impl Iterator for CellIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        let flat = self
            .current
            .iter()
            .fold(0u64, |acc, &c| (acc << self.levels) | c) as usize;
        // advance
        let mut axis = self.current.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.current[axis] += 1;
            if self.current[axis] < self.lower[axis] + self.span {
                break;
            }
            self.current[axis] = self.lower[axis];
        }
        Some(flat)
    }
}

/// Built-in test-function families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Constant,
    Step,
    Spike,
    DyadicMartingale,
    LogSingularity,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::Constant,
        GeneratorKind::Step,
        GeneratorKind::Spike,
        GeneratorKind::DyadicMartingale,
        GeneratorKind::LogSingularity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Constant => "constant",
            GeneratorKind::Step => "step",
            GeneratorKind::Spike => "spike",
            GeneratorKind::DyadicMartingale => "dyadic_martingale",
            GeneratorKind::LogSingularity => "log_singularity",
        }
    }

    /// Parameter names accepted by this kind.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            GeneratorKind::Constant => &["c"],
            GeneratorKind::Step => &["h", "axis"],
            GeneratorKind::Spike => &["h"],
            GeneratorKind::DyadicMartingale => &["amplitude"],
            GeneratorKind::LogSingularity => &["x0"],
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = BmoError;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BmoError::UnknownKind(s.to_string()))
    }
}

/// A real function, constant on each finest cell of a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    shape: GridShape,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct GridFile<'a> {
    n: usize,
    levels: u32,
    origin: &'a [f64],
    side: f64,
    values: &'a [f64],
}

impl GridFunction {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        let expected = shape.cell_count();
        if values.len() != expected {
            return Err(BmoError::parse(
                "values",
                format!("expected {expected} values, got {}", values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BmoError::parse(
                "values",
                format!("entry {i} is not a finite number"),
            ));
        }
        Ok(GridFunction { shape, values })
    }

    /// Function on the unit cube `[0,1)^n`.
    pub fn on_unit_cube(dimension: usize, levels: u32, values: Vec<f64>) -> Result<Self> {
        GridFunction::new(GridShape::new(RootCube::unit(dimension), levels)?, values)
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn root(&self) -> &RootCube {
        self.shape.root()
    }

    pub fn dimension(&self) -> usize {
        self.shape.dimension()
    }

    pub fn levels(&self) -> u32 {
        self.shape.levels()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(
            self.shape.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `(1/|c|) ∫_c φ`.
    pub fn cube_average(&self, cube: &DyadicCube) -> Result<f64> {
        let cells = self.shape.cells(cube)?;
        let count = 1u64 << (self.dimension() as u32 * (self.levels() - cube.level));
        let sum: f64 = cells.map(|i| self.values[i]).sum();
        Ok(sum / count as f64)
    }

    /// `(1/|c|) ∫_c |φ - base|`.
    pub fn mean_oscillation_about(&self, cube: &DyadicCube, base: f64) -> Result<f64> {
        let cells = self.shape.cells(cube)?;
        let count = 1u64 << (self.dimension() as u32 * (self.levels() - cube.level));
        let sum: f64 = cells.map(|i| (self.values[i] - base).abs()).sum();
        Ok(sum / count as f64)
    }

    /// Mean oscillation about the cube's own average.
    pub fn mean_oscillation(&self, cube: &DyadicCube) -> Result<f64> {
        let avg = self.cube_average(cube)?;
        self.mean_oscillation_about(cube, avg)
    }

    pub fn generate(
        kind: GeneratorKind,
        shape: GridShape,
        params: &BTreeMap<String, f64>,
        seed: u64,
    ) -> Result<GridFunction> {
        if let Some(unknown) = params
            .keys()
            .find(|k| !kind.parameters().contains(&k.as_str()))
        {
            return Err(BmoError::invalid(format!(
                "generator `{kind}` does not take parameter `{unknown}`"
            )));
        }
        let param = |name: &str, default: f64| params.get(name).copied().unwrap_or(default);
        let cells = shape.cell_count();
        let values = match kind {
            GeneratorKind::Constant => vec![param("c", 1.0); cells],
            GeneratorKind::Step => {
                let h = param("h", 1.0);
                let axis = param("axis", 0.0);
                if axis.fract() != 0.0 || axis < 0.0 || axis as usize >= shape.dimension() {
                    return Err(BmoError::invalid(format!(
                        "step axis {axis} is out of range"
                    )));
                }
                let axis = axis as usize;
                let mid = shape.root().origin()[axis] + 0.5 * shape.root().side();
                (0..cells)
                    .map(|i| {
                        if shape.cell_midpoint(i)[axis] >= mid {
                            h
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            GeneratorKind::Spike => {
                let mut v = vec![0.0; cells];
                v[cells - 1] = param("h", 1.0);
                v
            }
            GeneratorKind::DyadicMartingale => {
                martingale_values(&shape, param("amplitude", 1.0), seed)
            }
            GeneratorKind::LogSingularity => {
                let root = shape.root();
                let x0 = param("x0", f64::NAN);
                let center: Vec<f64> = root
                    .origin()
                    .iter()
                    .map(|o| {
                        if x0.is_nan() {
                            o + 0.5 * root.side()
                        } else {
                            x0
                        }
                    })
                    .collect();
                let floor = 0.5 * root.side() * dyadic_scale(shape.levels());
                (0..cells)
                    .map(|i| {
                        let r = shape
                            .cell_midpoint(i)
                            .iter()
                            .zip(&center)
                            .map(|(x, c)| (x - c) * (x - c))
                            .sum::<f64>()
                            .sqrt();
                        // a midpoint sitting on the singularity is clipped
                        r.max(floor).ln()
                    })
                    .collect()
            }
        };
        GridFunction::new(shape, values)
    }

    pub fn from_json_str(text: &str) -> Result<GridFunction> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| BmoError::parse("<document>", e.to_string()))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| BmoError::parse("<document>", "expected a JSON object"))?;
        let field = |name: &str| {
            obj.get(name)
                .ok_or_else(|| BmoError::parse(name, "missing field"))
        };
        let uint = |name: &str| {
            field(name)?
                .as_u64()
                .ok_or_else(|| BmoError::parse(name, "expected a non-negative integer"))
        };
        let numbers = |name: &str| -> Result<Vec<f64>> {
            field(name)?
                .as_array()
                .ok_or_else(|| BmoError::parse(name, "expected an array of numbers"))?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_f64()
                        .ok_or_else(|| BmoError::parse(name, format!("entry {i} is not a number")))
                })
                .collect()
        };

        let n = uint("n")? as usize;
        if n == 0 {
            return Err(BmoError::parse("n", "dimension must be at least 1"));
        }
        let levels =
            u32::try_from(uint("levels")?).map_err(|_| BmoError::parse("levels", "too large"))?;
        let origin = numbers("origin")?;
        if origin.len() != n {
            return Err(BmoError::parse(
                "origin",
                format!("expected {n} coordinates, got {}", origin.len()),
            ));
        }
        let side = field("side")?
            .as_f64()
            .ok_or_else(|| BmoError::parse("side", "expected a number"))?;
        let root =
            RootCube::new(origin, side).map_err(|e| BmoError::parse("side", e.to_string()))?;
        let shape =
            GridShape::new(root, levels).map_err(|e| BmoError::parse("levels", e.to_string()))?;
        let values = numbers("values")?;
        GridFunction::new(shape, values)
    }

    pub fn to_json_string(&self) -> String {
        let file = GridFile {
            n: self.dimension(),
            levels: self.levels(),
            origin: self.root().origin(),
            side: self.root().side(),
            values: &self.values,
        };
        serde_json::to_string(&file).expect("grid functions hold only finite numbers")
    }

    /// One-dimensional CSV: a `value` header, then `2^levels` lines. The
    /// root is the unit interval.
    pub fn from_csv_str(text: &str) -> Result<GridFunction> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("value") => {}
            other => {
                return Err(BmoError::parse(
                    "header",
                    format!("expected `value`, found {other:?}"),
                ))
            }
        }
        let values = lines
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|e| BmoError::parse("value", format!("line {}: {e}", i + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        if !values.len().is_power_of_two() {
            return Err(BmoError::parse(
                "value",
                format!(
                    "expected a power-of-two number of values, got {}",
                    values.len()
                ),
            ));
        }
        let levels = values.len().trailing_zeros();
        GridFunction::on_unit_cube(1, levels, values)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        if self.dimension() != 1 {
            return Err(BmoError::invalid("CSV output is only defined for n = 1"));
        }
        let mut out = String::from("value\n");
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        Ok(out)
    }

    /// Reads JSON, or CSV when the extension is `.csv`.
    pub fn load(path: impl AsRef<Path>) -> Result<GridFunction> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            GridFunction::from_csv_str(&text)
        } else {
            GridFunction::from_json_str(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            self.to_csv_string()?
        } else {
            self.to_json_string()
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Sum of zero-mean increments along each root-to-cell path. Each
/// subdivision node draws `2^n` uniform values in `[-a, a]` and recentres
/// them, so the child averages reproduce the parent's value.
fn martingale_values(shape: &GridShape, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.dimension() as u32;
    let fanout = 1usize << n;
    let mut level_values = vec![0.0];
    for level in 0..shape.levels() {
        let finer_len = 1usize << (n * (level + 1));
        let mut finer = vec![0.0; finer_len];
        let mut increments = vec![0.0; fanout];
        for (parent_flat, &parent_value) in level_values.iter().enumerate() {
            increments
                .iter_mut()
                .for_each(|x| *x = rng.gen_range(-amplitude..=amplitude));
            let mean = increments.iter().sum::<f64>() / fanout as f64;
            let parent = DyadicCube::from_flat(n as usize, level, parent_flat as u64);
            for (child, inc) in parent.children().iter().zip(&increments) {
                finer[child.flat_index() as usize] = parent_value + inc - mean;
            }
        }
        level_values = finer;
    }
    level_values
}
