//! Composition operators `C_φ f = f ∘ φ` induced by basepoint-preserving
//! maps `φ: Y → X`, and two independent ways of deciding whether `C_φ` is
//! an isometry from `Lip_0(X)` to `Lip_0(Y)`.
//!
//! * [`isometry_oracle`] is geometric. `‖C_φ f‖` is the support function at
//!   `f` of the hull of the pushed-forward molecules
//!   `(δ_φ(u) - δ_φ(v)) / d_Y(u, v)`, so `C_φ` is isometric exactly when `φ`
//!   is nonexpansive and every molecule of `X` lies in that hull.
//! * [`isometry_via_theorem`] checks nonexpansiveness and property (M).
//!   Those two together always give an isometry; when one fails the answer
//!   is "not isometric" only if `X` has the peak property, and otherwise the
//!   route reports [`TheoremOutcome::Inconclusive`].
//!
//! Property (M) asks for domain pairs whose images converge to `(x, y)` with
//! distance ratio tending to 1. In a finite space convergent sequences are
//! eventually constant and, for a nonexpansive map, ratios `<= 1` tending to
//! 1 are eventually equal to 1, so the finite check is exact attainment:
//! some `(u, v)` with `φ(u) = x`, `φ(v) = y` and `d_Y(u, v) = d_X(x, y)`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlp::{self, Membership};
use crate::freespace;
use crate::lipfunc::{self, FunctionJson, LipschitzFunction};
use crate::metric::{PairIndex, PointedMetricSpace};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct BasepointMap<'a> {
    domain: &'a PointedMetricSpace,
    codomain: &'a PointedMetricSpace,
    images: Vec<usize>,
}

impl<'a> BasepointMap<'a> {
    pub fn new(
        domain: &'a PointedMetricSpace,
        codomain: &'a PointedMetricSpace,
        images: Vec<usize>,
    ) -> Result<Self> {
        if images.len() != domain.len() {
            return Err(Error::input(format!(
                "map gives {} images for {} domain points",
                images.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = images.iter().find(|&&x| x >= codomain.len()) {
            return Err(Error::input(format!("image index {bad} outside the codomain")));
        }
        if images[domain.basepoint()] != codomain.basepoint() {
            return Err(Error::input("map does not send basepoint to basepoint"));
        }
        Ok(BasepointMap { domain, codomain, images })
    }

    pub fn identity(space: &'a PointedMetricSpace) -> Self {
        BasepointMap { domain: space, codomain: space, images: (0..space.len()).collect() }
    }

    pub fn constant(domain: &'a PointedMetricSpace, codomain: &'a PointedMetricSpace) -> Self {
        BasepointMap { domain, codomain, images: vec![codomain.basepoint(); domain.len()] }
    }

    pub fn domain(&self) -> &'a PointedMetricSpace {
        self.domain
    }

    pub fn codomain(&self) -> &'a PointedMetricSpace {
        self.codomain
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, u: usize) -> usize {
        self.images[u]
    }

    /// `d_X(φ(u), φ(v)) / d_Y(u, v)`.
    pub fn ratio(&self, p: PairIndex) -> Rational {
        self.codomain.d(self.images[p.first], self.images[p.second])
            / self.domain.d(p.first, p.second)
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.codomain.len()];
        for &x in &self.images {
            hit[x] = true;
        }
        hit.into_iter().all(|h| h)
    }

    pub fn apply(&self, f: &LipschitzFunction) -> Result<LipschitzFunction<'a>> {
        if f.space() != self.codomain {
            return Err(Error::input(format!(
                "function lives on {:?}, map codomain is {:?}",
                f.space().name(),
                self.codomain.name()
            )));
        }
        let values = self.images.iter().map(|&x| f.value(x).clone()).collect();
        LipschitzFunction::new(self.domain, values)
    }

    /// `‖C_φ‖ = Lip(φ)`; 0 for a constant map.
    pub fn operator_norm(&self) -> Rational {
        self.domain.unordered_pairs().map(|p| self.ratio(p)).max().unwrap_or_else(Rational::zero)
    }

    pub fn check_nonexpansive(&self) -> NonexpansiveCheck {
        let witness = self
            .domain
            .unordered_pairs()
            .find(|&p| self.codomain.d(self.images[p.first], self.images[p.second]) > self.domain.d(p.first, p.second));
        NonexpansiveCheck { nonexpansive: witness.is_none(), witness }
    }

    pub fn detect_dilation(&self) -> Result<Dilation> {
        let mut pairs = self.domain.unordered_pairs();
        let first = pairs
            .next()
            .ok_or_else(|| Error::EmptyDomain("dilation needs a domain with two points".into()))?;
        let k = self.ratio(first);
        if let Some(other) = pairs.find(|&p| self.ratio(p) != k) {
            return Ok(Dilation::NotDilation { first, second: Some(other) });
        }
        if k.is_zero() {
            return Ok(Dilation::NotDilation { first, second: None });
        }
        Ok(Dilation::Dilation { k })
    }

    pub fn check_property_m(&self) -> PropertyMReport {
        let entries: Vec<PropertyMEntry> = self
            .codomain
            .ordered_pairs()
            .map(|pair| {
                let witness = self.domain.ordered_pairs().find(|q| {
                    self.images[q.first] == pair.first
                        && self.images[q.second] == pair.second
                        && self.domain.d(q.first, q.second) == self.codomain.d(pair.first, pair.second)
                });
                PropertyMEntry { pair, witness }
            })
            .collect();
        PropertyMReport { holds: entries.iter().all(|e| e.witness.is_some()), entries }
    }

    /// `T m_uv = (δ_φ(u) - δ_φ(v)) / d_Y(u, v)` in codomain coordinates, one
    /// per ordered domain pair. A one-point domain contributes the zero
    /// vector so the hull is `{0}`.
    fn pushed_molecules(&self) -> (Vec<PairIndex>, Vec<Vec<Rational>>) {
        let dim = freespace::dimension(self.codomain);
        let pairs: Vec<PairIndex> = self.domain.ordered_pairs().collect();
        if pairs.is_empty() {
            return (Vec::new(), vec![vec![Rational::zero(); dim]]);
        }
        let vectors = pairs
            .iter()
            .map(|&q| {
                let mut v = vec![Rational::zero(); dim];
                let (x, y) = (self.images[q.first], self.images[q.second]);
                if x != y {
                    let inv = self.domain.d(q.first, q.second).recip();
                    if let Some(c) = freespace::coordinate(self.codomain, x) {
                        v[c] = inv.clone();
                    }
                    if let Some(c) = freespace::coordinate(self.codomain, y) {
                        v[c] = -inv;
                    }
                }
                v
            })
            .collect();
        (pairs, vectors)
    }

    pub fn to_json(&self) -> MapJson {
        MapJson {
            domain: self.domain.name().to_string(),
            codomain: self.codomain.name().to_string(),
            map: self
                .domain
                .labels()
                .iter()
                .zip(&self.images)
                .map(|(u, &x)| (u.clone(), self.codomain.label(x).to_string()))
                .collect(),
        }
    }
}

/// `{ "domain": "Y", "codomain": "X", "map": {"e": "e", "y1": "x"} }`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: String,
    pub codomain: String,
    pub map: BTreeMap<String, String>,
}

impl MapJson {
    pub fn bind<'a>(
        &self,
        domain: &'a PointedMetricSpace,
        codomain: &'a PointedMetricSpace,
    ) -> Result<BasepointMap<'a>> {
        if self.domain != domain.name() || self.codomain != codomain.name() {
            return Err(Error::input(format!(
                "map is {:?} -> {:?}, spaces given are {:?} -> {:?}",
                self.domain,
                self.codomain,
                domain.name(),
                codomain.name()
            )));
        }
        if let Some(extra) = self.map.keys().find(|k| domain.index_of(k).is_none()) {
            return Err(Error::input(format!("no point {extra:?} in the domain")));
        }
        let images = domain
            .labels()
            .iter()
            .map(|u| {
                let x = self
                    .map
                    .get(u)
                    .ok_or_else(|| Error::input(format!("map has no image for {u:?}")))?;
                codomain
                    .index_of(x)
                    .ok_or_else(|| Error::input(format!("image {x:?} is not a codomain point")))
            })
            .collect::<Result<Vec<_>>>()?;
        BasepointMap::new(domain, codomain, images)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonexpansiveCheck {
    pub nonexpansive: bool,
    /// A domain pair whose distance grows under the map.
    pub witness: Option<PairIndex>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dilation {
    Dilation { k: Rational },
    /// Two pairs with different ratios, or a single pair collapsed to
    /// distance 0 when every ratio is 0.
    NotDilation { first: PairIndex, second: Option<PairIndex> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyMEntry {
    /// Codomain pair.
    pub pair: PairIndex,
    /// Domain pair over it at the same distance.
    pub witness: Option<PairIndex>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyMReport {
    pub holds: bool,
    pub entries: Vec<PropertyMEntry>,
}

impl PropertyMReport {
    pub fn first_unmatched(&self) -> Option<PairIndex> {
        self.entries.iter().find(|e| e.witness.is_none()).map(|e| e.pair)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Theorem,
    Both,
}

/// Convex weights over pushed-forward domain molecules reproducing the
/// codomain molecule of `pair`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    pub pair: PairIndex,
    pub weights: Vec<(PairIndex, Rational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<'a> {
    /// One cover per unordered codomain pair. The pushed-forward hull is
    /// symmetric, so covering one orientation covers both.
    Cover(Vec<Cover>),
    /// `Lip(function) = 1` but `Lip(function ∘ φ) = composed_norm != 1`.
    Separating { function: LipschitzFunction<'a>, composed_norm: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsometryVerdict<'a> {
    pub isometric: bool,
    pub method: Method,
    pub certificate: Certificate<'a>,
    /// The codomain is the one-point space and `Lip_0(X) = {0}`.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TheoremOutcome<'a> {
    Decided(IsometryVerdict<'a>),
    /// A hypothesis failed and the codomain lacks the peak property.
    Inconclusive { nonexpansive: bool, property_m: bool },
}

impl<'a> TheoremOutcome<'a> {
    pub fn verdict(&self) -> Option<&IsometryVerdict<'a>> {
        match self {
            TheoremOutcome::Decided(v) => Some(v),
            TheoremOutcome::Inconclusive { .. } => None,
        }
    }
}

fn degenerate_verdict<'a>(method: Method) -> IsometryVerdict<'a> {
    IsometryVerdict { isometric: true, method, certificate: Certificate::Cover(Vec::new()), degenerate: true }
}

/// `z ↦ d_X(z, x) - d_X(e, x)`: norm 1, and its composition exceeds norm 1
/// on a pair the map expands onto `x`.
fn distance_function<'a>(space: &'a PointedMetricSpace, x: usize) -> LipschitzFunction<'a> {
    let shift = space.d(space.basepoint(), x).clone();
    let values = (0..space.len()).map(|z| space.d(z, x) - &shift).collect();
    LipschitzFunction::new(space, values).expect("vanishes at the basepoint")
}

fn expansion_certificate<'a>(map: &BasepointMap<'a>, witness: PairIndex) -> Result<Certificate<'a>> {
    let f = distance_function(map.codomain, map.images[witness.second]);
    let composed_norm = map.apply(&f)?.lip_norm();
    Ok(Certificate::Separating { function: f, composed_norm })
}

/// Geometric decision: nonexpansive, and every codomain molecule is a
/// convex combination of pushed-forward domain molecules.
pub fn isometry_oracle<'a>(map: &BasepointMap<'a>) -> Result<IsometryVerdict<'a>> {
    let codomain = map.codomain;
    if codomain.len() == 1 {
        return Ok(degenerate_verdict(Method::Oracle));
    }
    let nonexpansive = map.check_nonexpansive();
    if let Some(w) = nonexpansive.witness {
        return Ok(IsometryVerdict {
            isometric: false,
            method: Method::Oracle,
            certificate: expansion_certificate(map, w)?,
            degenerate: false,
        });
    }

    let (ypairs, generators) = map.pushed_molecules();
    let xpairs: Vec<PairIndex> = codomain.unordered_pairs().collect();
    // Independent LPs; results are collected in pair order.
    let answers = xpairs
        .par_iter()
        .map(|&p| {
            let target = freespace::molecule(codomain, p)?.vector.coords().to_vec();
            exactlp::membership(&target, &generators)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut covers = Vec::with_capacity(xpairs.len());
    for (&p, answer) in xpairs.iter().zip(answers) {
        match answer {
            Membership::Inside { weights } => covers.push(Cover {
                pair: p,
                weights: ypairs
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(&q, w)| (q, w))
                    .collect(),
            }),
            Membership::Outside { separator } => {
                let mut values = vec![Rational::zero(); codomain.len()];
                for (z, v) in values.iter_mut().enumerate() {
                    if let Some(c) = freespace::coordinate(codomain, z) {
                        *v = separator[c].clone();
                    }
                }
                let raw = LipschitzFunction::new(codomain, values)?;
                let norm = raw.lip_norm();
                if !norm.is_positive() {
                    return Err(Error::inconsistency("separator has zero Lipschitz norm"));
                }
                let function = raw.scaled(&norm.recip());
                let composed_norm = map.apply(&function)?.lip_norm();
                return Ok(IsometryVerdict {
                    isometric: false,
                    method: Method::Oracle,
                    certificate: Certificate::Separating { function, composed_norm },
                    degenerate: false,
                });
            }
        }
    }
    Ok(IsometryVerdict {
        isometric: true,
        method: Method::Oracle,
        certificate: Certificate::Cover(covers),
        degenerate: false,
    })
}

/// Nonexpansive + (M) gives an isometry on any codomain; a failure of
/// either gives a non-isometry only when the codomain has the peak
/// property.
pub fn isometry_via_theorem<'a>(map: &BasepointMap<'a>) -> Result<TheoremOutcome<'a>> {
    let codomain = map.codomain;
    if codomain.len() == 1 {
        return Ok(TheoremOutcome::Decided(degenerate_verdict(Method::Theorem)));
    }
    let nonexpansive = map.check_nonexpansive();
    let m = map.check_property_m();
    if nonexpansive.nonexpansive && m.holds {
        let covers = m
            .entries
            .iter()
            .filter(|e| e.pair.first > e.pair.second)
            .map(|e| Cover { pair: e.pair, weights: vec![(e.witness.unwrap(), Rational::one())] })
            .collect();
        return Ok(TheoremOutcome::Decided(IsometryVerdict {
            isometric: true,
            method: Method::Theorem,
            certificate: Certificate::Cover(covers),
            degenerate: false,
        }));
    }
    if !lipfunc::has_peak_property(codomain)?.holds {
        return Ok(TheoremOutcome::Inconclusive {
            nonexpansive: nonexpansive.nonexpansive,
            property_m: m.holds,
        });
    }
    let certificate = match nonexpansive.witness {
        Some(w) => expansion_certificate(map, w)?,
        None => {
            // A function peaking at the unmatched pair: every other image pair
            // stays below 1 - margin, and the pairs over it have ratio < 1.
            let pair = m.first_unmatched().expect("property (M) failed");
            let peak = lipfunc::construct_peaking(codomain, pair)?
                .ok_or_else(|| Error::inconsistency("peak property holds but no peaking function"))?;
            let composed_norm = map.apply(&peak.function)?.lip_norm();
            Certificate::Separating { function: peak.function, composed_norm }
        }
    };
    Ok(TheoremOutcome::Decided(IsometryVerdict {
        isometric: false,
        method: Method::Theorem,
        certificate,
        degenerate: false,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsometryDecision<'a> {
    pub verdict: IsometryVerdict<'a>,
    /// The theorem route's answer when it ran.
    pub theorem: Option<TheoremOutcome<'a>>,
}

/// Runs the requested route(s). With [`Method::Both`] the oracle verdict
/// is reported and a conclusive theorem answer that disagrees with it is an
/// [`Error::Inconsistency`]. With [`Method::Theorem`] an inconclusive answer
/// falls back to the oracle, still tagged as such in `theorem`.
pub fn decide_isometry<'a>(map: &BasepointMap<'a>, method: Method) -> Result<IsometryDecision<'a>> {
    match method {
        Method::Oracle => Ok(IsometryDecision { verdict: isometry_oracle(map)?, theorem: None }),
        Method::Theorem => {
            let theorem = isometry_via_theorem(map)?;
            let verdict = match theorem.verdict() {
                Some(v) => v.clone(),
                None => isometry_oracle(map)?,
            };
            Ok(IsometryDecision { verdict, theorem: Some(theorem) })
        }
        Method::Both => {
            let mut verdict = isometry_oracle(map)?;
            let theorem = isometry_via_theorem(map)?;
            if let Some(t) = theorem.verdict() {
                if t.isometric != verdict.isometric {
                    return Err(Error::inconsistency(format!(
                        "routes disagree: oracle says {}, theorem says {}",
                        verdict.isometric, t.isometric
                    )));
                }
            }
            verdict.method = Method::Both;
            Ok(IsometryDecision { verdict, theorem: Some(theorem) })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateCheck {
    Confirmed,
    Refuted(String),
}

impl CertificateCheck {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, CertificateCheck::Confirmed)
    }
}

/// Re-checks a verdict's certificate from scratch against `map`.
pub fn verify_certificate(verdict: &IsometryVerdict, map: &BasepointMap) -> Result<CertificateCheck> {
    use CertificateCheck::Refuted;
    let codomain = map.codomain;
    let domain = map.domain;
    match &verdict.certificate {
        Certificate::Cover(covers) => {
            if !verdict.isometric {
                return Ok(Refuted("cover certificate on a negative verdict".into()));
            }
            if codomain.len() == 1 {
                return Ok(if verdict.degenerate && covers.is_empty() {
                    CertificateCheck::Confirmed
                } else {
                    Refuted("one-point codomain must be reported as degenerate".into())
                });
            }
            if verdict.degenerate {
                return Ok(Refuted("degenerate flag on a nontrivial codomain".into()));
            }
            if let Some(w) = map.check_nonexpansive().witness {
                return Ok(Refuted(format!("map expands domain pair {w:?}")));
            }
            for c in covers {
                codomain.check_pair(c.pair)?;
                for (q, _) in &c.weights {
                    domain.check_pair(*q)?;
                }
            }
            for p in codomain.unordered_pairs() {
                let Some(cover) = covers.iter().find(|c| c.pair.same_unordered(p)) else {
                    return Ok(Refuted(format!("codomain pair {p:?} is not covered")));
                };
                let target = freespace::molecule(codomain, cover.pair)?.vector.coords().to_vec();
                let dim = target.len();
                let gens: Vec<Vec<Rational>> = cover
                    .weights
                    .iter()
                    .map(|(q, _)| {
                        let mut v = vec![Rational::zero(); dim];
                        let (x, y) = (map.images[q.first], map.images[q.second]);
                        if x != y {
                            let inv = domain.d(q.first, q.second).recip();
                            if let Some(c) = freespace::coordinate(codomain, x) {
                                v[c] = inv.clone();
                            }
                            if let Some(c) = freespace::coordinate(codomain, y) {
                                v[c] = -inv;
                            }
                        }
                        v
                    })
                    .collect();
                let weights: Vec<Rational> = cover.weights.iter().map(|(_, w)| w.clone()).collect();
                if !exactlp::check_convex_combination(&weights, &target, &gens) {
                    return Ok(Refuted(format!("cover of {:?} does not recombine", cover.pair)));
                }
            }
            Ok(CertificateCheck::Confirmed)
        }
        Certificate::Separating { function, composed_norm } => {
            if verdict.isometric {
                return Ok(Refuted("separating function on a positive verdict".into()));
            }
            if function.space() != codomain {
                return Err(Error::input("separating function is not defined on the codomain"));
            }
            if !function.lip_norm().is_one() {
                return Ok(Refuted(format!("Lip(f) = {}, expected 1", function.lip_norm())));
            }
            let actual = map.apply(function)?.lip_norm();
            if actual != *composed_norm {
                return Ok(Refuted(format!("Lip(f∘φ) = {actual}, certificate claims {composed_norm}")));
            }
            if actual.is_one() {
                return Ok(Refuted("Lip(f∘φ) = Lip(f); the norm is preserved".into()));
            }
            Ok(CertificateCheck::Confirmed)
        }
    }
}

// ---- JSON forms ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightJson {
    pub pair: [String; 2],
    #[serde(with = "rational::serde_str")]
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverJson {
    pub pair: [String; 2],
    pub weights: Vec<WeightJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateJson {
    Cover {
        covers: Vec<CoverJson>,
    },
    Separating {
        function: FunctionJson,
        #[serde(with = "rational::serde_str")]
        lip: Rational,
        #[serde(with = "rational::serde_str")]
        composed_lip: Rational,
    },
}

/// `{ "isometric": bool, "method": "...", "certificate": {...}, "degenerate": bool }`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub isometric: bool,
    pub method: Method,
    pub certificate: CertificateJson,
    pub degenerate: bool,
}

impl IsometryVerdict<'_> {
    pub fn to_json(&self, map: &BasepointMap) -> VerdictJson {
        let labels = |s: &PointedMetricSpace, p: PairIndex| {
            let (a, b) = s.pair_labels(p);
            [a, b]
        };
        let certificate = match &self.certificate {
            Certificate::Cover(covers) => CertificateJson::Cover {
                covers: covers
                    .iter()
                    .map(|c| CoverJson {
                        pair: labels(map.codomain, c.pair),
                        weights: c
                            .weights
                            .iter()
                            .map(|(q, w)| WeightJson { pair: labels(map.domain, *q), weight: w.clone() })
                            .collect(),
                    })
                    .collect(),
            },
            Certificate::Separating { function, composed_norm } => CertificateJson::Separating {
                function: function.to_json(),
                lip: function.lip_norm(),
                composed_lip: composed_norm.clone(),
            },
        };
        VerdictJson { isometric: self.isometric, method: self.method, certificate, degenerate: self.degenerate }
    }
}

impl VerdictJson {
    pub fn bind<'a>(&self, map: &BasepointMap<'a>) -> Result<IsometryVerdict<'a>> {
        let certificate = match &self.certificate {
            CertificateJson::Cover { covers } => Certificate::Cover(
                covers
                    .iter()
                    .map(|c| {
                        Ok(Cover {
                            pair: map.codomain.pair_by_labels(&c.pair[0], &c.pair[1])?,
                            weights: c
                                .weights
                                .iter()
                                .map(|w| {
                                    Ok((map.domain.pair_by_labels(&w.pair[0], &w.pair[1])?, w.weight.clone()))
                                })
                                .collect::<Result<Vec<_>>>()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            CertificateJson::Separating { function, composed_lip, .. } => Certificate::Separating {
                function: function.bind(map.codomain)?,
                composed_norm: composed_lip.clone(),
            },
        };
        Ok(IsometryVerdict {
            isometric: self.isometric,
            method: self.method,
            certificate,
            degenerate: self.degenerate,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::metric::fixtures::{collinear3, equilateral, m};
    use crate::rational::{int, ratio};

    #[test]
    fn apply_examples() {
        let e = equilateral();
        let f = LipschitzFunction::new(&e, vec![int(0), ratio(1, 2), ratio(-1, 2)]).unwrap();
        assert_eq!(BasepointMap::identity(&e).apply(&f).unwrap(), f);
        assert_eq!(
            BasepointMap::constant(&e, &e).apply(&f).unwrap(),
            LipschitzFunction::zero(&e)
        );
        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let g = LipschitzFunction::new(&x, vec![int(0), ratio(1, 2)]).unwrap();
        assert_eq!(phi.apply(&g).unwrap().value(1), &ratio(1, 2));
        assert!(phi.apply(&f).is_err());
    }

    #[test]
    fn map_invariants() {
        let e = equilateral();
        assert!(BasepointMap::new(&e, &e, vec![1, 1, 2]).is_err());
        assert!(BasepointMap::new(&e, &e, vec![0, 1]).is_err());
        assert!(BasepointMap::new(&e, &e, vec![0, 1, 5]).is_err());
    }

    #[test]
    fn operator_norm_and_nonexpansive() {
        let e = equilateral();
        assert_eq!(BasepointMap::identity(&e).operator_norm(), int(1));
        assert_eq!(BasepointMap::constant(&e, &e).operator_norm(), int(0));
        assert!(BasepointMap::constant(&e, &e).check_nonexpansive().nonexpansive);

        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        assert_eq!(phi.operator_norm(), ratio(1, 2));
        assert!(phi.check_nonexpansive().nonexpansive);

        let big = segment("B", "x", int(2));
        let doubling = BasepointMap::new(&y, &big, vec![0, 1]).unwrap();
        let check = doubling.check_nonexpansive();
        assert!(!check.nonexpansive);
        assert_eq!(check.witness, Some(PairIndex::new(1, 0)));
    }

    #[test]
    fn dilation_examples() {
        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        assert_eq!(phi.detect_dilation().unwrap(), Dilation::Dilation { k: ratio(1, 2) });
        let e = equilateral();
        assert_eq!(BasepointMap::identity(&e).detect_dilation().unwrap(), Dilation::Dilation { k: int(1) });
        let collapse = BasepointMap::new(&e, &e, vec![0, 1, 1]).unwrap();
        assert!(matches!(
            collapse.detect_dilation().unwrap(),
            Dilation::NotDilation { second: Some(_), .. }
        ));
        let pt = PointedMetricSpace::from_matrix("pt", m(&[&[0]])).unwrap();
        assert!(matches!(
            BasepointMap::constant(&pt, &e).detect_dilation(),
            Err(Error::EmptyDomain(_))
        ));
    }

    #[test]
    fn property_m_examples() {
        let e = equilateral();
        assert!(BasepointMap::identity(&e).check_property_m().holds);

        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let r = phi.check_property_m();
        assert!(!r.holds);
        assert!(r.entries.iter().all(|e| e.witness.is_none()));

        let (y, x) = non_injective();
        let phi = BasepointMap::new(&y, &x, vec![0, 1, 1]).unwrap();
        let r = phi.check_property_m();
        assert!(r.holds);
        let xe = r.entries.iter().find(|e| e.pair == PairIndex::new(1, 0)).unwrap();
        assert_eq!(xe.witness, Some(PairIndex::new(1, 0)));
    }

    #[test]
    fn oracle_identity() {
        let e = equilateral();
        let id = BasepointMap::identity(&e);
        let v = isometry_oracle(&id).unwrap();
        assert!(v.isometric);
        let Certificate::Cover(covers) = &v.certificate else { panic!() };
        assert_eq!(covers.len(), 3);
        for c in covers {
            assert_eq!(c.weights, vec![(c.pair, int(1))]);
        }
        assert!(verify_certificate(&v, &id).unwrap().is_confirmed());
    }

    #[test]
    fn oracle_dilation_half() {
        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let v = isometry_oracle(&phi).unwrap();
        assert!(!v.isometric);
        let Certificate::Separating { function, composed_norm } = &v.certificate else { panic!() };
        assert_eq!(function.values(), &[int(0), ratio(1, 2)]);
        assert_eq!(function.lip_norm(), int(1));
        assert_eq!(*composed_norm, ratio(1, 2));
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
    }

    #[test]
    fn oracle_non_injective_isometric() {
        let (y, x) = non_injective();
        let phi = BasepointMap::new(&y, &x, vec![0, 1, 1]).unwrap();
        let v = isometry_oracle(&phi).unwrap();
        assert!(v.isometric);
        let Certificate::Cover(covers) = &v.certificate else { panic!() };
        assert_eq!(covers[0].weights, vec![(PairIndex::new(1, 0), int(1))]);
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
    }

    #[test]
    fn theorem_route_examples() {
        let e = equilateral();
        let id = BasepointMap::identity(&e);
        let t = isometry_via_theorem(&id).unwrap();
        let v = t.verdict().unwrap();
        assert!(v.isometric);
        assert!(verify_certificate(v, &id).unwrap().is_confirmed());

        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let t = isometry_via_theorem(&phi).unwrap();
        let v = t.verdict().unwrap();
        assert!(!v.isometric);
        assert!(verify_certificate(v, &phi).unwrap().is_confirmed());

        // into the collinear space, missing the point 1: (M) fails, no peak property
        let c = collinear3();
        let y = pointed("Y2", &["0", "2"], m(&[&[0, 2], &[2, 0]]));
        let phi = BasepointMap::new(&y, &c, vec![0, 2]).unwrap();
        assert!(phi.check_nonexpansive().nonexpansive);
        assert!(!phi.check_property_m().holds);
        assert_eq!(
            isometry_via_theorem(&phi).unwrap(),
            TheoremOutcome::Inconclusive { nonexpansive: true, property_m: false }
        );
        // the oracle still decides: 1 is not in the image, so not isometric
        let v = isometry_oracle(&phi).unwrap();
        assert!(!v.isometric);
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
    }

    #[test]
    fn isometric_without_property_m_on_collinear_codomain() {
        // X = {0,1,2} on a line; Y doubles the midpoint into 1 and 1' with
        // d_Y(0,2) = 3. The outer molecule of X is the average of the two
        // inner ones, which are hit exactly, so C_φ is isometric while (M)
        // fails at (2,0).
        let c = collinear3();
        let y = pointed(
            "Y",
            &["0", "1", "1'", "2"],
            m(&[&[0, 1, 2, 3], &[1, 0, 1, 2], &[2, 1, 0, 1], &[3, 2, 1, 0]]),
        );
        let phi = BasepointMap::new(&y, &c, vec![0, 1, 1, 2]).unwrap();
        assert!(phi.check_nonexpansive().nonexpansive);
        let r = phi.check_property_m();
        assert!(!r.holds);
        assert_eq!(r.first_unmatched(), Some(PairIndex::new(0, 2)));
        let v = isometry_oracle(&phi).unwrap();
        assert!(v.isometric);
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
        assert!(matches!(isometry_via_theorem(&phi).unwrap(), TheoremOutcome::Inconclusive { .. }));
    }

    #[test]
    fn expanding_map_certificate() {
        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", int(2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        for v in [isometry_oracle(&phi).unwrap(), isometry_via_theorem(&phi).unwrap().verdict().unwrap().clone()] {
            assert!(!v.isometric);
            let Certificate::Separating { composed_norm, .. } = &v.certificate else { panic!() };
            assert_eq!(*composed_norm, int(2));
            assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
        }
    }

    #[test]
    fn degenerate_codomain() {
        let e = equilateral();
        let pt = PointedMetricSpace::from_matrix("pt", m(&[&[0]])).unwrap();
        let phi = BasepointMap::constant(&e, &pt);
        let v = isometry_oracle(&phi).unwrap();
        assert!(v.isometric && v.degenerate);
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
        assert!(isometry_via_theorem(&phi).unwrap().verdict().unwrap().degenerate);
    }

    #[test]
    fn one_point_domain() {
        let pt = PointedMetricSpace::from_matrix("pt", m(&[&[0]])).unwrap();
        let e = equilateral();
        let phi = BasepointMap::constant(&pt, &e);
        let v = isometry_oracle(&phi).unwrap();
        assert!(!v.isometric);
        assert!(verify_certificate(&v, &phi).unwrap().is_confirmed());
    }

    #[test]
    fn tampered_certificates_refuted() {
        let e = equilateral();
        let id = BasepointMap::identity(&e);
        let mut v = isometry_oracle(&id).unwrap();
        if let Certificate::Cover(covers) = &mut v.certificate {
            covers[0].weights[0].1 = ratio(9, 10);
        }
        assert!(!verify_certificate(&v, &id).unwrap().is_confirmed());

        let mut v = isometry_oracle(&id).unwrap();
        if let Certificate::Cover(covers) = &mut v.certificate {
            covers.pop();
        }
        assert!(!verify_certificate(&v, &id).unwrap().is_confirmed());

        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let mut v = isometry_oracle(&phi).unwrap();
        v.isometric = true;
        assert!(!verify_certificate(&v, &phi).unwrap().is_confirmed());
    }

    #[test]
    fn both_routes_and_json_round_trip() {
        let y = segment("Y", "u", int(1));
        let x = segment("X", "x", ratio(1, 2));
        let phi = BasepointMap::new(&y, &x, vec![0, 1]).unwrap();
        let d = decide_isometry(&phi, Method::Both).unwrap();
        assert_eq!(d.verdict.method, Method::Both);
        let json = serde_json::to_string(&d.verdict.to_json(&phi)).unwrap();
        let back: VerdictJson = serde_json::from_str(&json).unwrap();
        let bound = back.bind(&phi).unwrap();
        assert_eq!(bound, d.verdict);
        assert!(verify_certificate(&bound, &phi).unwrap().is_confirmed());

        let mj = serde_json::to_string(&phi.to_json()).unwrap();
        assert_eq!(mj, r#"{"domain":"Y","codomain":"X","map":{"e":"e","u":"x"}}"#);
        let back: MapJson = serde_json::from_str(&mj).unwrap();
        assert_eq!(back.bind(&y, &x).unwrap(), phi);
        assert!(back.bind(&x, &y).is_err());
    }
}
