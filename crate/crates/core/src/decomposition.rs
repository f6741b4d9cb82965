//! Stopping-time (Calderón–Zygmund type) selection of dyadic cubes.
//!
//! The function is first divided by its dyadic BMO seminorm. Generation 0
//! is the root cube. Inside every cube `S` of generation `λ - 1` the
//! dyadic descendants are visited depth first; a descendant `Q` is selected
//! into generation `λ` as soon as its mean oscillation about `avg_S`
//! exceeds `θ`, and the search below `Q` stops there. Unselected cubes are
//! subdivided until the finest grid level.
//!
//! Because `S` itself oscillates by at most 1 about its own average and
//! every selected cube's parent was not selected, each selected cube has
//! oscillation in `(θ, 2^n θ]`, which drives all the bounds checked by
//! [`check_features`].

use serde::Serialize;

use crate::error::{BmoError, Result};
use crate::grid::{GridFunction, GridShape};
use crate::lattice::DyadicCube;
use crate::oscillation::{bmo_seminorm, nonzero_seminorm};

/// Default stopping threshold.
pub const DEFAULT_THETA: f64 = std::f64::consts::E;

/// Arithmetic slack allowed when a feature bound is met with equality.
pub const FEATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedCube {
    #[serde(flatten)]
    pub cube: DyadicCube,
    /// Average of the normalized function over the reference cube of the
    /// previous generation.
    pub base_average: f64,
    pub own_average: f64,
    /// Mean oscillation about `base_average`.
    pub oscillation: f64,
    /// Index into the previous generation; `None` for generation 1, whose
    /// reference cube is the root.
    #[serde(skip)]
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    #[serde(skip)]
    pub root: DyadicCube,
    pub theta: f64,
    /// The seminorm the function was divided by.
    pub normalization: f64,
    /// `generations[λ - 1]` holds generation `λ`, sorted by level and then
    /// index.
    pub generations: Vec<Vec<SelectedCube>>,
    /// Set when some unselected cube reached the finest level.
    #[serde(skip)]
    pub truncated_at_level: bool,
}

impl Decomposition {
    pub fn max_generation(&self) -> usize {
        self.generations.len()
    }

    /// Cubes of generation `lambda`; generation 0 is the root alone.
    pub fn generation_cubes(&self, lambda: usize) -> Result<Vec<DyadicCube>> {
        match lambda {
            0 => Ok(vec![self.root.clone()]),
            l if l <= self.generations.len() => Ok(self.generations[l - 1]
                .iter()
                .map(|s| s.cube.clone())
                .collect()),
            l => Err(BmoError::invalid(format!(
                "generation {l} out of range 0..={}",
                self.generations.len()
            ))),
        }
    }

    /// Total volume of generation `lambda`.
    pub fn generation_measure(&self, shape: &GridShape, lambda: usize) -> Result<f64> {
        Ok(self
            .generation_cubes(lambda)?
            .iter()
            .map(|c| shape.root().volume_of(c))
            .fold(0.0, |acc, v| acc + v))
    }

    /// Mask over all grid cells marking the union of generation `lambda`.
    pub fn covered_cells(&self, shape: &GridShape, lambda: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; shape.cell_count()];
        for cube in self.generation_cubes(lambda)? {
            for i in shape.cells(&cube)? {
                mask[i] = true;
            }
        }
        Ok(mask)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("decomposition holds finite numbers")
    }
}

/// Runs `max_generations` rounds of stopping-time selection below `root`.
pub fn decompose(
    f: &GridFunction,
    root: &DyadicCube,
    theta: f64,
    max_generations: usize,
) -> Result<Decomposition> {
    if !(theta > 1.0 && theta.is_finite()) {
        return Err(BmoError::invalid(format!(
            "theta must be a finite number greater than 1, got {theta}"
        )));
    }
    if max_generations == 0 {
        return Err(BmoError::invalid(
            "number of generations must be at least 1",
        ));
    }
    f.shape().check_cube(root)?;
    let norm = nonzero_seminorm(f)?.value;
    let g = f.map(|v| v / norm)?;
    let levels = f.levels();

    let mut truncated = false;
    let mut previous = vec![(root.clone(), g.cube_average(root)?)];
    let mut generations = Vec::with_capacity(max_generations);
    for lambda in 1..=max_generations {
        let mut current = Vec::new();
        for (parent_idx, (reference, base)) in previous.iter().enumerate() {
            let mut stack: Vec<DyadicCube> = if reference.level < levels {
                reference.children().into_iter().rev().collect()
            } else {
                Vec::new()
            };
            while let Some(q) = stack.pop() {
                let osc = g.mean_oscillation_about(&q, *base)?;
                if osc > theta {
                    current.push(SelectedCube {
                        own_average: g.cube_average(&q)?,
                        cube: q,
                        base_average: *base,
                        oscillation: osc,
                        parent: (lambda > 1).then_some(parent_idx),
                    });
                } else if q.level < levels {
                    stack.extend(q.children().into_iter().rev());
                } else {
                    truncated = true;
                }
            }
        }
        current.sort_by(|a, b| a.cube.cmp(&b.cube));
        previous = current
            .iter()
            .map(|s| (s.cube.clone(), s.own_average))
            .collect();
        generations.push(current);
    }

    Ok(Decomposition {
        root: root.clone(),
        theta,
        normalization: norm,
        generations,
        truncated_at_level: truncated,
    })
}

/// Outcome of one family of checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureCheck {
    pub passed: bool,
    /// Smallest `bound - value` over all checked items; `None` when there
    /// was nothing to check.
    pub worst_slack: Option<f64>,
    pub items: usize,
}

impl FeatureCheck {
    fn new() -> Self {
        FeatureCheck {
            passed: true,
            worst_slack: None,
            items: 0,
        }
    }

    fn record(&mut self, slack: f64) {
        self.items += 1;
        self.worst_slack = Some(self.worst_slack.map_or(slack, |s| s.min(slack)));
        if slack < -FEATURE_TOL || slack.is_nan() {
            self.passed = false;
        }
    }

    fn record_strict(&mut self, slack: f64) {
        self.record(slack);
        if !(slack > 0.0) {
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub lambda: usize,
    pub count: usize,
    pub measure: f64,
    /// Previous generation's measure divided by θ.
    pub decay_bound: f64,
    /// `θ^-λ |root|`.
    pub cumulative_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureReport {
    /// Off the next generation, the function stays within θ of the
    /// reference average.
    pub complement: FeatureCheck,
    /// `|avg_Q - base| <= 2^n θ`.
    pub average_jump: FeatureCheck,
    /// `θ < osc <= 2^n θ`.
    pub selection_window: FeatureCheck,
    /// Per-generation and cumulative geometric decay of the selected measure.
    pub measure_decay: FeatureCheck,
    /// Outside generation λ, `|φ - avg_root| <= λ 2^n θ + θ`.
    pub telescoped: FeatureCheck,
    /// The same with the compact constant `2^n λ θ`; informational only.
    pub telescoped_compact: FeatureCheck,
    /// The subdivision parent of each selected cube was not itself selectable.
    pub maximality: FeatureCheck,
    /// Generations nest and are internally disjoint.
    pub nesting: FeatureCheck,
    pub generations: Vec<GenerationSummary>,
}

impl FeatureReport {
    /// All gated checks pass.
    pub fn passed(&self) -> bool {
        self.gated().iter().all(|(_, c)| c.passed)
    }

    pub fn gated(&self) -> [(&'static str, &FeatureCheck); 7] {
        [
            ("complement", &self.complement),
            ("average_jump", &self.average_jump),
            ("selection_window", &self.selection_window),
            ("measure_decay", &self.measure_decay),
            ("telescoped", &self.telescoped),
            ("maximality", &self.maximality),
            ("nesting", &self.nesting),
        ]
    }
}

/// Recomputes every average and oscillation of `d` from the raw cells of
/// `f` and checks the bounds the selection guarantees.
pub fn check_features(f: &GridFunction, d: &Decomposition) -> Result<FeatureReport> {
    let shape = f.shape();
    shape
        .check_cube(&d.root)
        .map_err(|e| BmoError::ShapeMismatch(format!("decomposition root: {e}")))?;
    let norm = bmo_seminorm(f).value;
    if !(d.normalization > 0.0) || (norm - d.normalization).abs() > 1e-12 * norm.max(1.0) {
        return Err(BmoError::ShapeMismatch(format!(
            "decomposition normalized by {} but the function has seminorm {norm}",
            d.normalization
        )));
    }
    for s in d.generations.iter().flatten() {
        shape
            .check_cube(&s.cube)
            .map_err(|e| BmoError::ShapeMismatch(format!("selected cube {:?}: {e}", s.cube)))?;
    }

    let g = f.map(|v| v / d.normalization)?;
    let theta = d.theta;
    let fanout = (1u64 << f.dimension()) as f64;
    let root_volume = shape.root().volume_of(&d.root);
    let root_avg = g.cube_average(&d.root)?;
    let values = g.values();

    let mut report = FeatureReport {
        complement: FeatureCheck::new(),
        average_jump: FeatureCheck::new(),
        selection_window: FeatureCheck::new(),
        measure_decay: FeatureCheck::new(),
        telescoped: FeatureCheck::new(),
        telescoped_compact: FeatureCheck::new(),
        maximality: FeatureCheck::new(),
        nesting: FeatureCheck::new(),
        generations: Vec::new(),
    };

    // reference cubes of generation λ - 1 with recomputed averages
    let mut references = vec![(d.root.clone(), root_avg)];
    let mut previous_measure = root_volume;
    for (gen_idx, generation) in d.generations.iter().enumerate() {
        let lambda = gen_idx + 1;
        let covered = d.covered_cells(shape, lambda)?;

        for (reference, base) in &references {
            for i in shape.cells(reference)? {
                if !covered[i] {
                    report.complement.record(theta - (values[i] - base).abs());
                }
            }
        }

        // references are pairwise disjoint (checked one generation earlier),
        // so the reference holding a cube is the one owning its first cell
        let mut reference_of = vec![None; shape.cell_count()];
        for (k, (r, _)) in references.iter().enumerate() {
            for i in shape.cells(r)? {
                reference_of[i] = Some(k);
            }
        }
        let mut owned = vec![false; shape.cell_count()];
        for s in generation {
            let mut cells = shape.cells(&s.cube)?.peekable();
            let holder = cells
                .peek()
                .and_then(|&i| reference_of[i])
                .filter(|&k| references[k].0.contains(&s.cube) && references[k].0 != s.cube);
            let mut overlap = false;
            for i in cells {
                overlap |= std::mem::replace(&mut owned[i], true);
            }
            report.nesting.record(if holder.is_some() && !overlap {
                0.0
            } else {
                -1.0
            });
            let Some(holder) = holder else {
                continue;
            };
            let base = references[holder].1;
            let own = g.cube_average(&s.cube)?;
            let osc = g.mean_oscillation_about(&s.cube, base)?;
            report
                .average_jump
                .record(fanout * theta - (own - base).abs());
            report
                .selection_window
                .record_strict((osc - theta).min(fanout * theta - osc));
            if let Some(up) = s.cube.parent() {
                // the reference cube itself is never selectable
                let parent_osc = g.mean_oscillation_about(&up, base)?;
                report.maximality.record(theta - parent_osc);
            }
        }

        let measure = d.generation_measure(shape, lambda)?;
        let decay_bound = previous_measure / theta;
        let cumulative_bound = root_volume * theta.powi(-(lambda as i32));
        report
            .measure_decay
            .record((decay_bound - measure).min(cumulative_bound - measure));
        report.generations.push(GenerationSummary {
            lambda,
            count: generation.len(),
            measure,
            decay_bound,
            cumulative_bound,
        });
        previous_measure = measure;

        let rigorous = lambda as f64 * fanout * theta + theta;
        let compact = fanout * lambda as f64 * theta;
        for i in shape.cells(&d.root)? {
            if !covered[i] {
                let dev = (values[i] - root_avg).abs();
                report.telescoped.record(rigorous - dev);
                report.telescoped_compact.record(compact - dev);
            }
        }

        references = generation
            .iter()
            .map(|s| Ok((s.cube.clone(), g.cube_average(&s.cube)?)))
            .collect::<Result<_>>()?;
    }

    Ok(report)
}
