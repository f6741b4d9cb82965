//! H¹ atoms on dyadic cubes and the pairing with BMO functions.
//!
//! An atom `τ` is supported on a dyadic cube `S`, has zero mean and
//! `|τ| <= 1/|S|`. For any such atom
//!
//! `|∫ φ τ| = |∫_S (φ - avg_S φ) τ| <= (1/|S|) ∫_S |φ - avg_S φ| <= ‖φ‖`,
//!
//! so a finite sum `Σ κ_j τ_j` pairs with `φ` to at most `Σ |κ_j| ‖φ‖`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::grid::{GridFunction, GridShape};
use crate::lattice::DyadicCube;
use crate::oscillation::bmo_seminorm;

/// Arithmetic slack on the duality bound and atom invariants.
pub const DUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    /// `+1/|S|` on the lower half of `S` along `axis`, `-1/|S|` on the upper.
    Haar {
        axis: usize,
    },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    shape: GridShape,
    support: DyadicCube,
    kind: AtomKind,
    /// Flat indices of the support's cells and the atom's value on each.
    cells: Vec<usize>,
    values: Vec<f64>,
}

impl Atom {
    /// Builds an atom from its values on the support cells (in
    /// [`GridShape::cells`] order) and checks the atom conditions.
    pub fn from_values(shape: &GridShape, support: DyadicCube, values: Vec<f64>) -> Result<Atom> {
        let cells: Vec<usize> = shape.cells(&support)?.collect();
        if cells.len() != values.len() {
            return Err(BmoError::ShapeMismatch(format!(
                "support has {} cells, got {} values",
                cells.len(),
                values.len()
            )));
        }
        let sup = 1.0 / shape.root().volume_of(&support);
        if let Some(v) = values
            .iter()
            .find(|v| !(v.abs() <= sup * (1.0 + DUALITY_TOL)))
        {
            return Err(BmoError::invalid(format!(
                "atom value {v} exceeds the sup bound {sup}"
            )));
        }
        let integral: f64 = values.iter().sum::<f64>() * shape.cell_volume();
        if integral.abs() > DUALITY_TOL {
            return Err(BmoError::invalid(format!(
                "atom has non-zero integral {integral}"
            )));
        }
        Ok(Atom {
            shape: shape.clone(),
            support,
            kind: AtomKind::Custom,
            cells,
            values,
        })
    }

    pub fn support(&self) -> &DyadicCube {
        &self.support
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    /// `1/|S|`.
    pub fn sup_bound(&self) -> f64 {
        1.0 / self.shape.root().volume_of(&self.support)
    }

    /// `(flat cell index, value)` over the support.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cells.iter().copied().zip(self.values.iter().copied())
    }

    /// `∫ τ`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.shape.cell_volume()
    }
}

/// Haar atom on `support` split along `axis`.
pub fn make_haar_atom(support: DyadicCube, axis: usize, shape: &GridShape) -> Result<Atom> {
    shape.check_cube(&support)?;
    if support.level >= shape.levels() {
        return Err(BmoError::invalid(format!(
            "a Haar atom needs a support above the finest level {}, got level {}",
            shape.levels(),
            support.level
        )));
    }
    if axis >= shape.dimension() {
        return Err(BmoError::invalid(format!(
            "axis {axis} out of range for dimension {}",
            shape.dimension()
        )));
    }
    let sup = 1.0 / shape.root().volume_of(&support);
    let half = 1u64 << (shape.levels() - support.level - 1);
    let split = (2 * support.index[axis] + 1) * half;
    let cells: Vec<usize> = shape.cells(&support)?.collect();
    let values = cells
        .iter()
        .map(|&i| {
            if shape.cell_cube(i).index[axis] < split {
                sup
            } else {
                -sup
            }
        })
        .collect();
    Ok(Atom {
        shape: shape.clone(),
        support,
        kind: AtomKind::Haar { axis },
        cells,
        values,
    })
}

/// Haar atom with uniformly drawn level, position and axis.
pub fn random_haar_atom<R: Rng + ?Sized>(shape: &GridShape, rng: &mut R) -> Result<Atom> {
    if shape.levels() == 0 {
        return Err(BmoError::invalid(
            "Haar atoms need a grid with at least one level",
        ));
    }
    let level = rng.gen_range(0..shape.levels());
    let index = (0..shape.dimension())
        .map(|_| rng.gen_range(0..1u64 << level))
        .collect();
    let axis = rng.gen_range(0..shape.dimension());
    make_haar_atom(DyadicCube { level, index }, axis, shape)
}

/// `∫ φ τ`.
pub fn pair(f: &GridFunction, atom: &Atom) -> Result<f64> {
    if f.shape() != atom.shape() {
        return Err(BmoError::ShapeMismatch(
            "atom and function live on different grids".into(),
        ));
    }
    let sum: f64 = atom.entries().map(|(i, v)| f.values()[i] * v).sum();
    Ok(sum * f.shape().cell_volume())
}

/// A finite combination `Σ κ_j τ_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicSum {
    pub terms: Vec<(f64, Atom)>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    kappa: f64,
    support: DyadicCube,
    kind: String,
    axis: usize,
}

#[derive(Serialize, Deserialize)]
struct SumFile {
    terms: Vec<TermFile>,
}

impl AtomicSum {
    pub fn new(terms: Vec<(f64, Atom)>) -> Self {
        AtomicSum { terms }
    }

    /// `Σ |κ_j|`.
    pub fn kappa_l1(&self) -> f64 {
        self.terms.iter().map(|(k, _)| k.abs()).sum()
    }

    /// `count` random Haar atoms with coefficients uniform in `[-1, 1]`.
    pub fn random_haar<R: Rng + ?Sized>(
        shape: &GridShape,
        count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let terms = (0..count)
            .map(|_| {
                let atom = random_haar_atom(shape, rng)?;
                Ok((rng.gen_range(-1.0..=1.0), atom))
            })
            .collect::<Result<_>>()?;
        Ok(AtomicSum { terms })
    }

    pub fn from_json_str(text: &str, shape: &GridShape) -> Result<Self> {
        let file: SumFile =
            serde_json::from_str(text).map_err(|e| BmoError::parse("terms", e.to_string()))?;
        let terms = file
            .terms
            .into_iter()
            .enumerate()
            .map(|(j, t)| {
                if t.kind != "haar" {
                    return Err(BmoError::parse(
                        "kind",
                        format!("term {j}: unsupported atom kind `{}`", t.kind),
                    ));
                }
                if !t.kappa.is_finite() {
                    return Err(BmoError::parse("kappa", format!("term {j}: not finite")));
                }
                let support = DyadicCube::new(t.support.level, t.support.index)
                    .map_err(|e| BmoError::parse("support", format!("term {j}: {e}")))?;
                let atom = make_haar_atom(support, t.axis, shape)
                    .map_err(|e| BmoError::parse("support", format!("term {j}: {e}")))?;
                Ok((t.kappa, atom))
            })
            .collect::<Result<_>>()?;
        Ok(AtomicSum { terms })
    }

    /// Only sums of Haar atoms have a file representation.
    pub fn to_json_string(&self) -> Result<String> {
        let terms = self
            .terms
            .iter()
            .map(|(kappa, atom)| match atom.kind {
                AtomKind::Haar { axis } => Ok(TermFile {
                    kappa: *kappa,
                    support: atom.support.clone(),
                    kind: "haar".into(),
                    axis,
                }),
                AtomKind::Custom => Err(BmoError::invalid("custom atoms cannot be serialized")),
            })
            .collect::<Result<_>>()?;
        Ok(serde_json::to_string(&SumFile { terms }).expect("finite coefficients"))
    }
}

/// `Σ κ_j ∫ φ τ_j`, summed in term order.
pub fn functional_apply(f: &GridFunction, sum: &AtomicSum) -> Result<f64> {
    sum.terms
        .iter()
        .try_fold(0.0, |acc, (kappa, atom)| Ok(acc + kappa * pair(f, atom)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub functional_value: f64,
    pub abs_value: f64,
    pub kappa_l1: f64,
    pub norm: f64,
    /// `Σ |κ_j| ‖φ‖`.
    pub bound: f64,
    /// `|value| / bound`, when the bound is positive.
    pub ratio: Option<f64>,
    pub passed: bool,
}

pub fn duality_report(f: &GridFunction, sum: &AtomicSum) -> Result<DualityReport> {
    let value = functional_apply(f, sum)?;
    let norm = bmo_seminorm(f).value;
    let kappa_l1 = sum.kappa_l1();
    let bound = kappa_l1 * norm;
    Ok(DualityReport {
        functional_value: value,
        abs_value: value.abs(),
        kappa_l1,
        norm,
        bound,
        ratio: (bound > 0.0).then(|| value.abs() / bound),
        passed: value.abs() <= bound + DUALITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::RootCube;

    fn shape(n: usize, levels: u32) -> GridShape {
        GridShape::new(RootCube::unit(n), levels).unwrap()
    }

    fn step() -> GridFunction {
        GridFunction::on_unit_cube(1, 1, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn unit_haar_atom() {
        let a = make_haar_atom(DyadicCube::root(1), 0, &shape(1, 1)).unwrap();
        assert_eq!(a.entries().collect::<Vec<_>>(), vec![(0, 1.0), (1, -1.0)]);
        assert_eq!(a.sup_bound(), 1.0);
        assert_eq!(a.integral(), 0.0);
    }

    #[test]
    fn quarter_support_has_height_four() {
        let a = make_haar_atom(DyadicCube::new(1, vec![0, 1]).unwrap(), 1, &shape(2, 3)).unwrap();
        assert!(a.entries().all(|(_, v)| v.abs() == 4.0));
        assert_eq!(a.entries().count(), 16);
        assert_eq!(a.integral(), 0.0);
    }

    #[test]
    fn finest_support_rejected() {
        assert!(make_haar_atom(DyadicCube::new(1, vec![1]).unwrap(), 0, &shape(1, 1)).is_err());
        assert!(make_haar_atom(DyadicCube::root(1), 1, &shape(1, 1)).is_err());
    }

    #[test]
    fn custom_atoms_are_validated() {
        let s = shape(1, 2);
        assert!(Atom::from_values(&s, DyadicCube::root(1), vec![1.0, -1.0, 0.5, -0.5]).is_ok());
        assert!(Atom::from_values(&s, DyadicCube::root(1), vec![1.0, -1.0, 0.5, 0.5]).is_err());
        assert!(Atom::from_values(&s, DyadicCube::root(1), vec![2.0, -2.0, 0.0, 0.0]).is_err());
        assert!(Atom::from_values(&s, DyadicCube::root(1), vec![0.0; 3]).is_err());
    }

    #[test]
    fn step_pairing() {
        let f = step();
        let a = make_haar_atom(DyadicCube::root(1), 0, f.shape()).unwrap();
        assert_eq!(pair(&f, &a).unwrap(), -0.5);
        let shifted = f.map(|v| v + 7.0).unwrap();
        assert_eq!(pair(&shifted, &a).unwrap(), -0.5);
        let c = GridFunction::on_unit_cube(1, 1, vec![3.0, 3.0]).unwrap();
        assert_eq!(pair(&c, &a).unwrap(), 0.0);

        let report = duality_report(&f, &AtomicSum::new(vec![(1.0, a)])).unwrap();
        assert_eq!(report.abs_value, 0.5);
        assert_eq!(report.bound, 0.5);
        assert_eq!(report.ratio, Some(1.0));
        assert!(report.passed);
    }

    #[test]
    fn two_term_sum() {
        let f = GridFunction::on_unit_cube(1, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let a1 = make_haar_atom(DyadicCube::root(1), 0, f.shape()).unwrap();
        let a2 = make_haar_atom(DyadicCube::new(1, vec![0]).unwrap(), 0, f.shape()).unwrap();
        let p1 = pair(&f, &a1).unwrap();
        let p2 = pair(&f, &a2).unwrap();
        assert_eq!((p1, p2), (-0.5, 0.0));
        let sum = AtomicSum::new(vec![(2.0, a1.clone()), (-1.0, a2)]);
        assert_eq!(functional_apply(&f, &sum).unwrap(), 2.0 * p1 - p2);
        assert_eq!(functional_apply(&f, &AtomicSum::default()).unwrap(), 0.0);
        assert_eq!(
            functional_apply(&f, &AtomicSum::new(vec![(1.0, a1.clone())])).unwrap(),
            pair(&f, &a1).unwrap()
        );
    }

    #[test]
    fn shape_mismatch() {
        let a = make_haar_atom(DyadicCube::root(1), 0, &shape(1, 2)).unwrap();
        assert!(matches!(pair(&step(), &a), Err(BmoError::ShapeMismatch(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = shape(2, 3);
        let text = r#"{"terms":[{"kappa":0.5,"support":{"level":1,"index":[1,0]},"kind":"haar","axis":1},
                              {"kappa":-2,"support":{"level":0,"index":[0,0]},"kind":"haar","axis":0}]}"#;
        let sum = AtomicSum::from_json_str(text, &s).unwrap();
        assert_eq!(sum.terms.len(), 2);
        assert_eq!(sum.kappa_l1(), 2.5);
        let again = AtomicSum::from_json_str(&sum.to_json_string().unwrap(), &s).unwrap();
        assert_eq!(again, sum);

        let bad =
            r#"{"terms":[{"kappa":1,"support":{"level":3,"index":[0,0]},"kind":"haar","axis":0}]}"#;
        assert!(AtomicSum::from_json_str(bad, &s).is_err());
        let bad =
            r#"{"terms":[{"kappa":1,"support":{"level":0,"index":[0,0]},"kind":"bump","axis":0}]}"#;
        assert!(AtomicSum::from_json_str(bad, &s).is_err());
    }
}
