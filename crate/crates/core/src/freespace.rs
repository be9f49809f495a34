//! The Lipschitz-free space of a finite pointed metric space.
//!
//! `F(X)` has the basis `{δ_p : p ≠ e}`, so a [`FreeVector`] is a coordinate
//! vector of length `n - 1`. Its unit ball is the convex hull of the
//! molecules `(δ_x - δ_y) / d(x, y)`; every query here is a membership or
//! margin LP over that generating set, never a facet enumeration.
//!
//! Because the space is finite-dimensional, "preserved extreme" is plain
//! extremality and "strongly exposed" is exposedness of a polytope vertex.
//! Verdicts say nothing about infinite spaces.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlp::{self, LinearProgram, LpOutcome, Membership, Relation, Sense};
use crate::metric::{PairIndex, PointedMetricSpace};
use crate::rational::{self, Rational};

/// Coordinate of point `p`, or `None` for the basepoint (`δ_e = 0`).
pub fn coordinate(space: &PointedMetricSpace, p: usize) -> Option<usize> {
    let base = space.basepoint();
    match p.cmp(&base) {
        std::cmp::Ordering::Less => Some(p),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(p - 1),
    }
}

pub fn dimension(space: &PointedMetricSpace) -> usize {
    space.len() - 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeVector<'a> {
    space: &'a PointedMetricSpace,
    coords: Vec<Rational>,
}

impl<'a> FreeVector<'a> {
    pub fn new(space: &'a PointedMetricSpace, coords: Vec<Rational>) -> Result<Self> {
        if coords.len() != dimension(space) {
            return Err(Error::input(format!(
                "free vector has {} coordinates, space needs {}",
                coords.len(),
                dimension(space)
            )));
        }
        Ok(FreeVector { space, coords })
    }

    pub fn zero(space: &'a PointedMetricSpace) -> Self {
        FreeVector { space, coords: vec![Rational::zero(); dimension(space)] }
    }

    /// The point evaluation `δ_p`.
    pub fn delta(space: &'a PointedMetricSpace, p: usize) -> Self {
        let mut v = Self::zero(space);
        if let Some(c) = coordinate(space, p) {
            v.coords[c] = Rational::one();
        }
        v
    }

    pub fn space(&self) -> &'a PointedMetricSpace {
        self.space
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        FreeVector { space: self.space, coords: self.coords.iter().map(|v| v * c).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule<'a> {
    pub pair: PairIndex,
    pub vector: FreeVector<'a>,
}

/// `(δ_x - δ_y) / d(x, y)` for the pair `(x, y)`.
pub fn molecule(space: &PointedMetricSpace, pair: PairIndex) -> Result<Molecule<'_>> {
    space.check_pair(pair)?;
    Ok(Molecule { pair, vector: molecule_vector(space, pair) })
}

fn molecule_vector(space: &PointedMetricSpace, pair: PairIndex) -> FreeVector<'_> {
    let inv = space.d(pair.first, pair.second).recip();
    let mut v = FreeVector::zero(space);
    if let Some(c) = coordinate(space, pair.first) {
        v.coords[c] = inv.clone();
    }
    if let Some(c) = coordinate(space, pair.second) {
        v.coords[c] = -inv;
    }
    v
}

/// One molecule per ordered pair, in lexicographic pair order.
pub fn all_molecules(space: &PointedMetricSpace) -> Result<Vec<Molecule<'_>>> {
    if space.len() < 2 {
        return Err(Error::EmptyDomain("a one-point space has no molecules".into()));
    }
    Ok(space
        .ordered_pairs()
        .map(|pair| Molecule { pair, vector: molecule_vector(space, pair) })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Extremality {
    Extreme,
    /// Convex weights over the other molecules reproducing this one.
    NotExtreme { combination: Vec<(PairIndex, Rational)> },
}

impl Extremality {
    pub fn is_extreme(&self) -> bool {
        matches!(self, Extremality::Extreme)
    }
}

/// Extreme iff the molecule is outside the hull of the remaining
/// `n(n-1) - 1` molecules.
pub fn is_extreme_molecule(space: &PointedMetricSpace, pair: PairIndex) -> Result<Extremality> {
    let target = molecule(space, pair)?;
    let others: Vec<Molecule> =
        all_molecules(space)?.into_iter().filter(|m| m.pair != pair).collect();
    let gens: Vec<Vec<Rational>> = others.iter().map(|m| m.vector.coords.clone()).collect();
    match exactlp::membership(&target.vector.coords, &gens)? {
        Membership::Outside { .. } => Ok(Extremality::Extreme),
        Membership::Inside { weights } => Ok(Extremality::NotExtreme {
            combination: others
                .iter()
                .zip(weights)
                .filter(|(_, w)| !w.is_zero())
                .map(|(m, w)| (m.pair, w))
                .collect(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Exposure {
    /// `<functional, m> = 1` and `<functional, m'> <= 1 - margin` for every
    /// other molecule `m'`, with the largest margin (capped at 1).
    Exposed { functional: Vec<Rational>, margin: Rational },
    NotExposed,
}

impl Exposure {
    pub fn is_exposed(&self) -> bool {
        matches!(self, Exposure::Exposed { .. })
    }
}

pub fn is_exposed_molecule(space: &PointedMetricSpace, pair: PairIndex) -> Result<Exposure> {
    let target = molecule(space, pair)?;
    let dim = dimension(space);
    let margin = dim;
    let mut lp = LinearProgram::new(dim + 1);
    lp.objective[margin] = Rational::one();
    lp.bound(margin, None, Some(Rational::one()));

    // each row is scaled by its distance so the coefficients are 0 and ±1
    let scaled = |m: &Molecule| {
        let d = space.d(m.pair.first, m.pair.second);
        let row: Vec<Rational> = m.vector.coords.iter().map(|c| c * d).collect();
        (row, d.clone())
    };
    let (mut row, d) = scaled(&target);
    row.push(Rational::zero());
    lp.constrain(row, Relation::Eq, d);
    // the reversed target row is implied by the equality and omitted
    for p in space.unordered_pairs().filter(|p| !p.same_unordered(pair)) {
        for q in [p, p.reversed()] {
            let (mut row, d) = scaled(&molecule(space, q)?);
            row.push(d.clone());
            lp.constrain(row, Relation::Le, d);
        }
    }
    let (solution, value) = match exactlp::solve(&lp, Sense::Maximize)? {
        LpOutcome::Optimal { solution, value } => (solution, value),
        other => {
            return Err(Error::inconsistency(format!(
                "exposure program is always feasible and bounded, got {other:?}"
            )))
        }
    };
    if !value.is_positive() {
        return Ok(Exposure::NotExposed);
    }
    let functional = solution[..dim].to_vec();
    let exposure = Exposure::Exposed { functional, margin: value };
    if !verify_exposure(space, pair, &exposure) {
        return Err(Error::inconsistency("exposing functional failed verification"));
    }
    Ok(exposure)
}

/// Direct re-check of an [`Exposure::Exposed`] witness.
pub fn verify_exposure(space: &PointedMetricSpace, pair: PairIndex, e: &Exposure) -> bool {
    let Exposure::Exposed { functional, margin } = e else {
        return false;
    };
    let Ok(molecules) = all_molecules(space) else {
        return false;
    };
    if functional.len() != dimension(space) || !margin.is_positive() {
        return false;
    }
    let cap = Rational::one() - margin;
    molecules.iter().all(|m| {
        let v = exactlp::dot(functional, &m.vector.coords);
        if m.pair == pair {
            v.is_one()
        } else {
            v <= cap
        }
    })
}

/// Membership of `v` in the unit ball, i.e. the hull of all molecules.
/// Weights are indexed like [`all_molecules`].
pub fn ball_membership(v: &FreeVector) -> Result<Membership> {
    let gens: Vec<Vec<Rational>> =
        all_molecules(v.space)?.into_iter().map(|m| m.vector.coords).collect();
    exactlp::membership(&v.coords, &gens)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoleculeReport {
    pub pair: [String; 2],
    pub extreme: bool,
    pub exposed: bool,
    #[serde(with = "rational::serde_opt")]
    pub margin: Option<Rational>,
}

/// The per-pair classification table, over all ordered pairs.
pub fn classify(space: &PointedMetricSpace) -> Result<Vec<MoleculeReport>> {
    space
        .ordered_pairs()
        .map(|p| {
            let extreme = is_extreme_molecule(space, p)?.is_extreme();
            let exposure = is_exposed_molecule(space, p)?;
            let (x, y) = space.pair_labels(p);
            Ok(MoleculeReport {
                pair: [x, y],
                extreme,
                exposed: exposure.is_exposed(),
                margin: match exposure {
                    Exposure::Exposed { margin, .. } => Some(margin),
                    Exposure::NotExposed => None,
                },
            })
        })
        .collect()
}

/// Independent of any LP: the molecule of `(x, y)` is extreme exactly when
/// no third point lies metrically between `x` and `y`.
pub fn strict_triangle_scan(space: &PointedMetricSpace, pair: PairIndex) -> bool {
    let (x, y) = (pair.first, pair.second);
    (0..space.len())
        .filter(|&z| z != x && z != y)
        .all(|z| space.d(x, z) + space.d(z, y) > *space.d(x, y))
}
