//! Finite pointed metric spaces with exact rational distances.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// An ordered pair of distinct point indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairIndex {
    pub first: usize,
    pub second: usize,
}

impl PairIndex {
    pub fn new(first: usize, second: usize) -> Self {
        PairIndex { first, second }
    }

    pub fn reversed(self) -> Self {
        PairIndex::new(self.second, self.first)
    }

    pub fn same_unordered(self, other: PairIndex) -> bool {
        self == other || self == other.reversed()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointedMetricSpace {
    name: String,
    labels: Vec<String>,
    basepoint: usize,
    dist: Vec<Vec<Rational>>,
}

/// The first metric axiom a matrix breaks, in scan order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateLabel(String),
    NonzeroDiagonal { point: String },
    Asymmetric { x: String, y: String },
    NonPositive { x: String, y: String },
    /// `d(x, y) > d(x, z) + d(z, y)`, reported as `(x, z, y)`.
    Triangle { x: String, z: String, y: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateLabel(l) => write!(f, "duplicate point label {l:?}"),
            Violation::NonzeroDiagonal { point } => write!(f, "d({point},{point}) is not 0"),
            Violation::Asymmetric { x, y } => write!(f, "symmetry fails: d({x},{y}) != d({y},{x})"),
            Violation::NonPositive { x, y } => write!(f, "positivity fails: d({x},{y}) <= 0"),
            Violation::Triangle { x, z, y } => {
                write!(f, "triangle inequality fails: d({x},{y}) > d({x},{z}) + d({z},{y})")
            }
        }
    }
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::DuplicateLabel(_) => "duplicate_label",
            Violation::NonzeroDiagonal { .. } => "nonzero_diagonal",
            Violation::Asymmetric { .. } => "asymmetric",
            Violation::NonPositive { .. } => "non_positive",
            Violation::Triangle { .. } => "triangle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Concavity {
    Concave,
    /// `d(x, y) >= d(x, z) + d(z, y)` for the distinct triple `(x, z, y)`.
    NotConcave { x: usize, z: usize, y: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformConcavity {
    pub uniformly_concave: bool,
    /// Minimum of `d(x,z) + d(z,y) - d(x,y)` over distinct triples; `None`
    /// when the space has fewer than three points.
    pub min_slack: Option<Rational>,
}

impl PointedMetricSpace {
    /// Builds and validates a space.
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        basepoint: usize,
        dist: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let space = Self::new_unchecked(name, labels, basepoint, dist)?;
        match space.validate()? {
            None => Ok(space),
            Some(v) => Err(Error::Input(format!("space {:?}: {v}", space.name))),
        }
    }

    /// Builds a space checking only shapes; the metric axioms are left to
    /// [`validate`](Self::validate).
    pub fn new_unchecked(
        name: impl Into<String>,
        labels: Vec<String>,
        basepoint: usize,
        dist: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::input("a pointed space needs at least its basepoint"));
        }
        if basepoint >= n {
            return Err(Error::input(format!("basepoint index {basepoint} out of range")));
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::input(format!(
                "distance matrix must be {n}x{n} to match the point labels"
            )));
        }
        Ok(PointedMetricSpace { name: name.into(), labels, basepoint, dist })
    }

    /// Convenience constructor: labels `"0".."n-1"`, basepoint `0`.
    pub fn from_matrix(name: impl Into<String>, dist: Vec<Vec<Rational>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::new(name, labels, 0, dist)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn d(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn pair_by_labels(&self, a: &str, b: &str) -> Result<PairIndex> {
        let find = |l: &str| {
            self.index_of(l)
                .ok_or_else(|| Error::input(format!("no point {l:?} in space {:?}", self.name)))
        };
        let p = PairIndex::new(find(a)?, find(b)?);
        self.check_pair(p)?;
        Ok(p)
    }

    pub fn check_pair(&self, p: PairIndex) -> Result<()> {
        if p.first >= self.len() || p.second >= self.len() {
            return Err(Error::input(format!("pair {p:?} out of range")));
        }
        if p.first == p.second {
            return Err(Error::input(format!("pair {p:?} is not a pair of distinct points")));
        }
        Ok(())
    }

    pub fn pair_labels(&self, p: PairIndex) -> (String, String) {
        (self.labels[p.first].clone(), self.labels[p.second].clone())
    }

    /// All ordered pairs of distinct points, lexicographically.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| PairIndex::new(i, j)))
    }

    /// One representative `(i, j)` with `i > j` per unordered pair, ordered
    /// `(1,0), (2,0), (2,1), (3,0), ...`.
    pub fn unordered_pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        (1..self.len()).flat_map(|i| (0..i).map(move |j| PairIndex::new(i, j)))
    }

    /// Returns `None` when every metric axiom holds, else the first
    /// violation found.
    pub fn validate(&self) -> Result<Option<Violation>> {
        let n = self.len();
        if self.dist.len() != n || self.dist.iter().any(|r| r.len() != n) {
            return Err(Error::input("distance matrix does not match label count"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Ok(Some(Violation::DuplicateLabel(l.clone())));
            }
        }
        let lab = |i: usize| self.labels[i].clone();
        for i in 0..n {
            if !self.dist[i][i].is_zero() {
                return Ok(Some(Violation::NonzeroDiagonal { point: lab(i) }));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.dist[i][j] != self.dist[j][i] {
                    return Ok(Some(Violation::Asymmetric { x: lab(i), y: lab(j) }));
                }
                if i != j && !self.dist[i][j].is_positive() {
                    return Ok(Some(Violation::NonPositive { x: lab(i), y: lab(j) }));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if self.dist[i][j] > &self.dist[i][k] + &self.dist[k][j] {
                        return Ok(Some(Violation::Triangle { x: lab(i), z: lab(k), y: lab(j) }));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Strict triangle inequality over every triple of distinct points.
    pub fn check_concave(&self) -> Concavity {
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if self.dist[i][j] >= &self.dist[i][k] + &self.dist[k][j] {
                        return Concavity::NotConcave { x: i, z: k, y: j };
                    }
                }
            }
        }
        Concavity::Concave
    }

    /// On a finite space uniform concavity is concavity: the minimum of
    /// finitely many positive slacks is positive.
    pub fn check_uniformly_concave(&self) -> UniformConcavity {
        let n = self.len();
        let mut min: Option<Rational> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    let slack = &self.dist[i][k] + &self.dist[k][j] - &self.dist[i][j];
                    if min.as_ref().map_or(true, |m| slack < *m) {
                        min = Some(slack);
                    }
                }
            }
        }
        let uniformly_concave = min.as_ref().map_or(true, |m| m.is_positive());
        UniformConcavity { uniformly_concave, min_slack: min }
    }

    /// The snowflake `(X, d^alpha)` with every distance rounded to
    /// `digits` decimals. Fails rather than return a non-metric.
    pub fn holder_transform(&self, alpha: &Rational, digits: u32) -> Result<Self> {
        if !alpha.is_positive() || *alpha >= Rational::from_integer(1.into()) {
            return Err(Error::input(format!(
                "Hölder exponent must lie strictly between 0 and 1, got {alpha}"
            )));
        }
        if digits == 0 {
            return Err(Error::input("digits must be positive"));
        }
        let n = self.len();
        let mut dist = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rounded_power(&self.dist[i][j], alpha, digits);
                dist[i][j] = v.clone();
                dist[j][i] = v;
            }
        }
        let name = format!("{}^{}@{}", self.name, rational::format(alpha), digits);
        let out = Self::new_unchecked(name, self.labels.clone(), self.basepoint, dist)?;
        match out.validate()? {
            None => Ok(out),
            Some(v) => Err(Error::Input(format!(
                "rounding to {digits} digits broke the metric ({v}); use more digits"
            ))),
        }
    }
}

/// `base^alpha` rounded half-up to `digits` decimals, for `base >= 0` and
/// rational `alpha > 0`. Exact integer arithmetic throughout.
pub fn rounded_power(base: &Rational, alpha: &Rational, digits: u32) -> Rational {
    assert!(!base.is_negative() && alpha.is_positive());
    let p = alpha.numer().to_biguint().unwrap();
    let q: u32 = alpha.denom().try_into().expect("exponent denominator too large");
    let p: usize = p.try_into().expect("exponent numerator too large");
    let a = num_traits::pow(base.numer().clone(), p);
    let b = num_traits::pow(base.denom().clone(), p);
    let ten_dq = num_traits::pow(BigInt::from(10), digits as usize * q as usize);
    // k = floor((a/b)^(1/q) * 10^digits)
    let k = (&a * &ten_dq / &b).nth_root(q);
    // round up when (k + 1/2)^q <= (a/b) * 10^(digits q)
    let lhs = num_traits::pow(BigInt::from(2) * &k + 1, q as usize) * &b;
    let rhs = num_traits::pow(BigInt::from(2), q as usize) * &a * &ten_dq;
    let k = if lhs <= rhs { k + 1 } else { k };
    Rational::new(k, num_traits::pow(BigInt::from(10), digits as usize))
}

/// On-disk form: rationals as strings, points by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub name: String,
    pub points: Vec<String>,
    pub basepoint: String,
    pub metric: Vec<Vec<String>>,
}

impl SpaceJson {
    pub fn from_space(space: &PointedMetricSpace) -> Self {
        SpaceJson {
            name: space.name.clone(),
            points: space.labels.clone(),
            basepoint: space.labels[space.basepoint].clone(),
            metric: space
                .dist
                .iter()
                .map(|r| r.iter().map(rational::format).collect())
                .collect(),
        }
    }

    /// Parses without checking the metric axioms.
    pub fn to_space_unchecked(&self) -> Result<PointedMetricSpace> {
        let basepoint = self
            .points
            .iter()
            .position(|p| *p == self.basepoint)
            .ok_or_else(|| Error::input(format!("basepoint {:?} is not a listed point", self.basepoint)))?;
        let dist = self
            .metric
            .iter()
            .map(|r| r.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        PointedMetricSpace::new_unchecked(self.name.clone(), self.points.clone(), basepoint, dist)
    }

    pub fn to_space(&self) -> Result<PointedMetricSpace> {
        let s = self.to_space_unchecked()?;
        match s.validate()? {
            None => Ok(s),
            Some(v) => Err(Error::Input(format!("space {:?}: {v}", s.name))),
        }
    }
}

impl Serialize for PointedMetricSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpaceJson::from_space(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointedMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SpaceJson::deserialize(d)?.to_space().map_err(serde::de::Error::custom)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn validate_examples() {
        assert_eq!(two_point(int(1)).validate().unwrap(), None);
        assert_eq!(equilateral().validate().unwrap(), None);

        let broken = PointedMetricSpace::new_unchecked(
            "broken",
            vec!["a".into(), "b".into(), "c".into()],
            0,
            m(&[&[0, 5, 1], &[5, 0, 1], &[1, 1, 0]]),
        )
        .unwrap();
        assert_eq!(
            broken.validate().unwrap(),
            Some(Violation::Triangle { x: "a".into(), z: "c".into(), y: "b".into() })
        );
        assert!(PointedMetricSpace::new("b", vec!["a".into(), "b".into(), "c".into()], 0, m(&[&[0, 5, 1], &[5, 0, 1], &[1, 1, 0]])).is_err());
    }

    #[test]
    fn validate_other_axioms() {
        let labels = || vec!["e".to_string(), "a".to_string()];
        let cases = [
            (m(&[&[0, 1], &[2, 0]]), "asymmetric"),
            (m(&[&[0, 0], &[0, 0]]), "non_positive"),
            (m(&[&[1, 1], &[1, 0]]), "nonzero_diagonal"),
        ];
        for (dist, kind) in cases {
            let s = PointedMetricSpace::new_unchecked("x", labels(), 0, dist).unwrap();
            assert_eq!(s.validate().unwrap().unwrap().kind(), kind);
        }
        let dup = PointedMetricSpace::new_unchecked("x", vec!["e".into(), "e".into()], 0, m(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(dup.validate().unwrap().unwrap().kind(), "duplicate_label");
        assert!(PointedMetricSpace::new_unchecked("x", labels(), 0, m(&[&[0]])).is_err());
        assert!(PointedMetricSpace::new_unchecked("x", labels(), 2, m(&[&[0, 1], &[1, 0]])).is_err());
    }

    #[test]
    fn concavity_examples() {
        assert_eq!(equilateral().check_concave(), Concavity::Concave);
        assert_eq!(collinear3().check_concave(), Concavity::NotConcave { x: 0, z: 1, y: 2 });
        assert_eq!(two_point(int(1)).check_concave(), Concavity::Concave);

        let u = equilateral().check_uniformly_concave();
        assert!(u.uniformly_concave);
        assert_eq!(u.min_slack, Some(int(1)));
        let u = collinear3().check_uniformly_concave();
        assert!(!u.uniformly_concave);
        assert_eq!(u.min_slack, Some(int(0)));
        let u = two_point(int(3)).check_uniformly_concave();
        assert!(u.uniformly_concave);
        assert_eq!(u.min_slack, None);
    }

    #[test]
    fn one_point_space_is_legal() {
        let s = PointedMetricSpace::from_matrix("pt", m(&[&[0]])).unwrap();
        assert_eq!(s.check_concave(), Concavity::Concave);
        assert!(s.check_uniformly_concave().uniformly_concave);
        assert_eq!(s.unordered_pairs().count(), 0);
    }

    #[test]
    fn holder_examples() {
        let h = equilateral().holder_transform(&ratio(1, 2), 6).unwrap();
        assert!(h.ordered_pairs().all(|p| *h.d(p.first, p.second) == int(1)));

        let h = collinear3().holder_transform(&ratio(1, 2), 6).unwrap();
        // sqrt(2) = 1.41421356... rounds to 1.414214
        assert_eq!(*h.d(0, 2), ratio(1_414_214, 1_000_000));
        assert_eq!(h.check_concave(), Concavity::Concave);
        assert!(h.name().contains("1/2") && h.name().contains('6'));

        assert!(matches!(collinear3().holder_transform(&int(1), 6), Err(Error::Input(_))));
        assert!(matches!(collinear3().holder_transform(&int(0), 6), Err(Error::Input(_))));
    }

    #[test]
    fn holder_rounding_can_break_metric() {
        // d^(1/2) of 1/100 rounds to 0 at one digit: not a metric
        let s = two_point(ratio(1, 10000));
        assert!(matches!(s.holder_transform(&ratio(1, 2), 1), Err(Error::Input(_))));
    }

    #[test]
    fn rounded_power_matches_float() {
        for (b, a, expected) in [
            (int(2), ratio(1, 2), 1.414214),
            (int(3), ratio(2, 3), 2.080084),
            (ratio(1, 2), ratio(1, 3), 0.793701),
            (int(10), ratio(1, 4), 1.778279),
        ] {
            let r = rounded_power(&b, &a, 6);
            assert_eq!(r, rational::parse(&format!("{expected:.6}")).unwrap(), "{b}^{a}");
        }
    }

    #[test]
    fn json_round_trip() {
        let s = equilateral();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"name":"equilateral","points":["e","a","b"],"basepoint":"e","metric":[["0","1","1"],["1","0","1"],["1","1","0"]]}"#
        );
        let back: PointedMetricSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let decimal = r#"{"name":"d","points":["e","a"],"basepoint":"e","metric":[["0","0.5"],["1/2","0"]]}"#;
        let d: PointedMetricSpace = serde_json::from_str(decimal).unwrap();
        assert_eq!(*d.d(0, 1), ratio(1, 2));
    }

    fn brute_force_is_metric(d: &[Vec<Rational>]) -> bool {
        let n = d.len();
        for i in 0..n {
            for j in 0..n {
                if d[i][j] != d[j][i] || (i == j) != d[i][j].is_zero() || d[i][j].is_negative() {
                    return false;
                }
                for k in 0..n {
                    if d[i][j] > &d[i][k] + &d[k][j] {
                        return false;
                    }
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn validate_agrees_with_brute_force(n in 1usize..5, raw in prop::collection::vec(-1i64..6, 16)) {
            let mut d = vec![vec![Rational::zero(); n]; n];
            let mut it = raw.iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = int(*it.next().unwrap());
                    d[i][j] = v.clone();
                    d[j][i] = v;
                }
            }
            let s = PointedMetricSpace::from_matrix("p", d.clone());
            prop_assert_eq!(s.is_ok(), brute_force_is_metric(&d));
        }

        #[test]
        fn holder_output_is_metric_or_error(
            raw in prop::collection::vec(1i64..8, 6),
            alpha_num in 1i64..4,
            digits in 1u32..6,
        ) {
            let mut d = vec![vec![Rational::zero(); 4]; 4];
            let mut it = raw.iter();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let v = int(*it.next().unwrap());
                    d[i][j] = v.clone();
                    d[j][i] = v;
                }
            }
            // repair by shortest paths
            for k in 0..4 { for i in 0..4 { for j in 0..4 {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] { d[i][j] = via; }
            }}}
            let s = PointedMetricSpace::from_matrix("p", d).unwrap();
            let alpha = ratio(alpha_num, 4);
            if let Ok(h) = s.holder_transform(&alpha, digits) {
                prop_assert_eq!(h.validate().unwrap(), None);
            }
            // enough digits always strictly improve every flat triple
            let h = s.holder_transform(&alpha, 8).unwrap();
            prop_assert_eq!(h.check_concave(), Concavity::Concave);
        }
    }
}
