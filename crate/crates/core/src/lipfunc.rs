//! Lipschitz functions on a finite pointed metric space and peaking
//! functions.
//!
//! On a finite space the open-set definition of peaking and its sequential
//! reformulation both reduce to one predicate: the difference quotient is
//! exactly 1 at the pair and at most `1 - margin` on every other unordered
//! pair, for some `margin > 0`. [`construct_peaking`] finds the largest such
//! margin by linear programming.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlp::{self, LinearProgram, LpOutcome, Relation, Sense};
use crate::metric::{PairIndex, PointedMetricSpace};
use crate::rational::{self, Rational};

/// A function on the points of `space`, vanishing at the basepoint.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzFunction<'a> {
    space: &'a PointedMetricSpace,
    values: Vec<Rational>,
}

impl<'a> LipschitzFunction<'a> {
    pub fn new(space: &'a PointedMetricSpace, values: Vec<Rational>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::input(format!(
                "{} values for a space of {} points",
                values.len(),
                space.len()
            )));
        }
        if !values[space.basepoint()].is_zero() {
            return Err(Error::input("a Lipschitz function must vanish at the basepoint"));
        }
        Ok(LipschitzFunction { space, values })
    }

    pub fn zero(space: &'a PointedMetricSpace) -> Self {
        LipschitzFunction { space, values: vec![Rational::zero(); space.len()] }
    }

    pub fn space(&self) -> &'a PointedMetricSpace {
        self.space
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Rational {
        &self.values[i]
    }

    /// `(f(x) - f(y)) / d(x, y)`.
    pub fn quotient(&self, p: PairIndex) -> Rational {
        (&self.values[p.first] - &self.values[p.second]) / self.space.d(p.first, p.second)
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        LipschitzFunction { space: self.space, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn negated(&self) -> Self {
        LipschitzFunction { space: self.space, values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::input("functions live on different spaces"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(LipschitzFunction { space: self.space, values })
    }

    /// Exact best Lipschitz constant; 0 on the one-point space.
    pub fn lip_norm(&self) -> Rational {
        self.space
            .unordered_pairs()
            .map(|p| self.quotient(p).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Ordered pairs whose signed quotient equals the norm.
    pub fn attaining_pairs(&self) -> Result<Vec<PairIndex>> {
        if self.space.len() < 2 {
            return Err(Error::EmptyDomain("a one-point space has no pairs".into()));
        }
        let norm = self.lip_norm();
        Ok(self.space.ordered_pairs().filter(|&p| self.quotient(p) == norm).collect())
    }

    pub fn to_json(&self) -> FunctionJson {
        FunctionJson {
            space: self.space.name().to_string(),
            values: self
                .space
                .labels()
                .iter()
                .zip(&self.values)
                .map(|(l, v)| (l.clone(), rational::format(v)))
                .collect(),
        }
    }
}

/// `{ "space": "X", "values": {"e": "0", "a": "1/2"} }`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionJson {
    pub space: String,
    pub values: BTreeMap<String, String>,
}

impl FunctionJson {
    /// Binds to `space`; points missing from `values` are rejected.
    pub fn bind<'a>(&self, space: &'a PointedMetricSpace) -> Result<LipschitzFunction<'a>> {
        if self.space != space.name() {
            return Err(Error::input(format!(
                "function is defined on {:?}, not {:?}",
                self.space,
                space.name()
            )));
        }
        if let Some(extra) = self.values.keys().find(|k| space.index_of(k).is_none()) {
            return Err(Error::input(format!("no point {extra:?} in space {:?}", space.name())));
        }
        let values = space
            .labels()
            .iter()
            .map(|l| {
                self.values
                    .get(l)
                    .ok_or_else(|| Error::input(format!("function has no value at {l:?}")))
                    .and_then(|s| rational::parse(s))
            })
            .collect::<Result<Vec<_>>>()?;
        LipschitzFunction::new(space, values)
    }
}

/// A function peaking at `pair` with the given positive margin.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakCertificate<'a> {
    pub function: LipschitzFunction<'a>,
    pub pair: PairIndex,
    pub margin: Rational,
}

impl PeakCertificate<'_> {
    /// Full enumeration of pair quotients: exactly 1 at the pair, at most
    /// `1 - margin` in absolute value everywhere else, `margin > 0`.
    pub fn verify(&self) -> bool {
        let f = &self.function;
        if !self.margin.is_positive() || f.space.check_pair(self.pair).is_err() {
            return false;
        }
        if !f.values[f.space.basepoint()].is_zero() || !f.quotient(self.pair).is_one() {
            return false;
        }
        let cap = Rational::one() - &self.margin;
        f.space
            .unordered_pairs()
            .filter(|p| !p.same_unordered(self.pair))
            .all(|p| f.quotient(p).abs() <= cap)
    }

    pub fn to_json(&self) -> PeakCertificateJson {
        let (x, y) = self.function.space.pair_labels(self.pair);
        PeakCertificateJson {
            pair: [x, y],
            margin: self.margin.clone(),
            function: self.function.to_json(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakCertificateJson {
    pub pair: [String; 2],
    #[serde(with = "rational::serde_str")]
    pub margin: Rational,
    pub function: FunctionJson,
}

impl PeakCertificateJson {
    pub fn bind<'a>(&self, space: &'a PointedMetricSpace) -> Result<PeakCertificate<'a>> {
        Ok(PeakCertificate {
            function: self.function.bind(space)?,
            pair: space.pair_by_labels(&self.pair[0], &self.pair[1])?,
            margin: self.margin.clone(),
        })
    }
}

/// Maximises the peaking margin at `pair`.
///
/// Variables are the values at the non-basepoint points plus the margin,
/// which is capped at 1 so the program stays bounded when there are no
/// side constraints. Returns `None` when the optimal margin is not positive.
pub fn construct_peaking<'a>(
    space: &'a PointedMetricSpace,
    pair: PairIndex,
) -> Result<Option<PeakCertificate<'a>>> {
    space.check_pair(pair)?;
    let n = space.len();
    let base = space.basepoint();
    // column of each point; the basepoint has none
    let column: Vec<Option<usize>> = (0..n)
        .scan(0usize, |next, i| {
            Some(if i == base {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let margin_col = n - 1;
    let mut lp = LinearProgram::new(n);
    lp.objective[margin_col] = Rational::one();
    lp.bound(margin_col, None, Some(Rational::one()));

    let difference = |p: PairIndex, sign: i64| {
        let mut row = vec![Rational::zero(); n];
        if let Some(c) = column[p.first] {
            row[c] = rational::int(sign);
        }
        if let Some(c) = column[p.second] {
            row[c] = rational::int(-sign);
        }
        row
    };

    lp.constrain(difference(pair, 1), Relation::Eq, space.d(pair.first, pair.second).clone());
    for p in space.unordered_pairs().filter(|p| !p.same_unordered(pair)) {
        let d = space.d(p.first, p.second);
        for sign in [1, -1] {
            // ±(f(z) - f(w)) + margin·d <= d
            let mut row = difference(p, sign);
            row[margin_col] = d.clone();
            lp.constrain(row, Relation::Le, d.clone());
        }
    }

    let (solution, margin) = match exactlp::solve(&lp, Sense::Maximize)? {
        LpOutcome::Optimal { solution, value } => (solution, value),
        other => {
            return Err(Error::inconsistency(format!(
                "peaking program is always feasible and bounded, got {other:?}"
            )))
        }
    };
    if !margin.is_positive() {
        return Ok(None);
    }
    let values = (0..n)
        .map(|i| column[i].map_or_else(Rational::zero, |c| solution[c].clone()))
        .collect();
    let cert = PeakCertificate { function: LipschitzFunction::new(space, values)?, pair, margin };
    if !cert.verify() {
        return Err(Error::inconsistency("peaking certificate failed verification"));
    }
    Ok(Some(cert))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakProperty<'a> {
    pub holds: bool,
    /// First unordered pair (in `(1,0), (2,0), (2,1), ...` order) with no
    /// peaking function.
    pub witness: Option<PairIndex>,
    /// One certificate per unordered pair checked before the witness.
    pub certificates: Vec<PeakCertificate<'a>>,
}

pub fn has_peak_property(space: &PointedMetricSpace) -> Result<PeakProperty<'_>> {
    let mut certificates = Vec::new();
    for p in space.unordered_pairs() {
        match construct_peaking(space, p)? {
            Some(c) => certificates.push(c),
            None => return Ok(PeakProperty { holds: false, witness: Some(p), certificates }),
        }
    }
    Ok(PeakProperty { holds: true, witness: None, certificates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::fixtures::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn f<'a>(s: &'a PointedMetricSpace, v: &[Rational]) -> LipschitzFunction<'a> {
        LipschitzFunction::new(s, v.to_vec()).unwrap()
    }

    #[test]
    fn lip_norm_examples() {
        let two = two_point(int(1));
        assert_eq!(f(&two, &[int(0), int(3)]).lip_norm(), int(3));
        let c = collinear3();
        assert_eq!(f(&c, &[int(0), int(1), int(1)]).lip_norm(), int(1));
        let e = equilateral();
        assert_eq!(f(&e, &[int(0), ratio(1, 2), ratio(-1, 2)]).lip_norm(), int(1));
    }

    #[test]
    fn attaining_pairs_examples() {
        let c = collinear3();
        assert_eq!(
            f(&c, &[int(0), int(1), int(1)]).attaining_pairs().unwrap(),
            vec![PairIndex::new(1, 0)]
        );
        let e = equilateral();
        assert_eq!(LipschitzFunction::zero(&e).attaining_pairs().unwrap().len(), 6);
        assert_eq!(
            f(&e, &[int(0), ratio(1, 2), ratio(-1, 2)]).attaining_pairs().unwrap(),
            vec![PairIndex::new(1, 2)]
        );
        let pt = PointedMetricSpace::from_matrix("pt", m(&[&[0]])).unwrap();
        assert_eq!(LipschitzFunction::zero(&pt).lip_norm(), int(0));
        assert!(matches!(LipschitzFunction::zero(&pt).attaining_pairs(), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn basepoint_must_vanish() {
        let e = equilateral();
        assert!(LipschitzFunction::new(&e, vec![int(1), int(0), int(0)]).is_err());
        assert!(LipschitzFunction::new(&e, vec![int(0), int(0)]).is_err());
    }

    #[test]
    fn peaking_equilateral() {
        let e = equilateral();
        let cert = construct_peaking(&e, PairIndex::new(1, 2)).unwrap().unwrap();
        assert_eq!(cert.margin, ratio(1, 2));
        assert_eq!(cert.function.values(), &[int(0), ratio(1, 2), ratio(-1, 2)]);
        assert!(cert.verify());
    }

    #[test]
    fn peaking_collinear_fails_on_outer_pair() {
        let c = collinear3();
        assert!(construct_peaking(&c, PairIndex::new(2, 0)).unwrap().is_none());
        let p = has_peak_property(&c).unwrap();
        assert!(!p.holds);
        assert_eq!(p.witness, Some(PairIndex::new(2, 0)));
    }

    #[test]
    fn peaking_two_point_margin_capped() {
        let two = two_point(int(2));
        let cert = construct_peaking(&two, PairIndex::new(1, 0)).unwrap().unwrap();
        assert_eq!(cert.margin, int(1));
        assert_eq!(cert.function.values(), &[int(0), int(2)]);
        assert!(has_peak_property(&two).unwrap().holds);
    }

    #[test]
    fn peak_property_equilateral() {
        let e = equilateral();
        let p = has_peak_property(&e).unwrap();
        assert!(p.holds);
        assert_eq!(p.certificates.len(), 3);
        assert!(p.certificates.iter().all(PeakCertificate::verify));
    }

    #[test]
    fn invalid_pair_rejected() {
        let e = equilateral();
        assert!(matches!(construct_peaking(&e, PairIndex::new(1, 1)), Err(Error::Input(_))));
        assert!(matches!(construct_peaking(&e, PairIndex::new(1, 7)), Err(Error::Input(_))));
    }

    #[test]
    fn certificate_tampering_detected() {
        let e = equilateral();
        let mut cert = construct_peaking(&e, PairIndex::new(1, 2)).unwrap().unwrap();
        cert.margin = ratio(3, 4);
        assert!(!cert.verify());
    }

    #[test]
    fn function_json() {
        let e = equilateral();
        let g = f(&e, &[int(0), ratio(1, 2), ratio(-1, 2)]);
        let text = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(text, r#"{"space":"equilateral","values":{"a":"1/2","b":"-1/2","e":"0"}}"#);
        let back: FunctionJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.bind(&e).unwrap(), g);
        let wrong = FunctionJson { space: "other".into(), values: back.values.clone() };
        assert!(wrong.bind(&e).is_err());
    }

    fn space_from(raw: &[i64], n: usize) -> PointedMetricSpace {
        let mut d = vec![vec![Rational::zero(); n]; n];
        let mut it = raw.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = int(*it.next().unwrap());
                d[i][j] = v.clone();
                d[j][i] = v;
            }
        }
        for k in 0..n { for i in 0..n { for j in 0..n {
            let via = &d[i][k] + &d[k][j];
            if via < d[i][j] { d[i][j] = via; }
        }}}
        PointedMetricSpace::from_matrix("r", d).unwrap()
    }

    proptest! {
        #[test]
        fn norm_is_seminorm(
            raw in prop::collection::vec(1i64..6, 6),
            a in prop::collection::vec(-5i64..6, 3),
            b in prop::collection::vec(-5i64..6, 3),
            c in 0i64..5,
        ) {
            let s = space_from(&raw, 4);
            let mk = |v: &[i64]| {
                let mut vals = vec![int(0)];
                vals.extend(v.iter().map(|&x| int(x)));
                LipschitzFunction::new(&s, vals).unwrap()
            };
            let (fa, fb) = (mk(&a), mk(&b));
            let c = int(c);
            prop_assert_eq!(fa.scaled(&c).lip_norm(), fa.lip_norm() * &c);
            prop_assert!(fa.add(&fb).unwrap().lip_norm() <= fa.lip_norm() + fb.lip_norm());
        }

        #[test]
        fn peaking_is_sign_symmetric(raw in prop::collection::vec(1i64..6, 6), i in 0usize..4, j in 0usize..4) {
            prop_assume!(i != j);
            let s = space_from(&raw, 4);
            let fwd = construct_peaking(&s, PairIndex::new(i, j)).unwrap();
            let bwd = construct_peaking(&s, PairIndex::new(j, i)).unwrap();
            prop_assert_eq!(fwd.is_some(), bwd.is_some());
            if let (Some(f), Some(b)) = (fwd, bwd) {
                prop_assert_eq!(&f.margin, &b.margin);
                let mirrored = PeakCertificate { function: f.function.negated(), pair: f.pair.reversed(), margin: f.margin.clone() };
                prop_assert!(mirrored.verify());
            }
        }
    }
}
