//! Seeded instance generation, corpus-wide property runs, and the search
//! for isometric maps without property (M).
//!
//! Every instance is generated from its own ChaCha stream keyed by
//! `(seed, index)`, so instances can be built and evaluated in parallel and
//! the merged report is still ordered by index and byte-for-byte stable.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compop::{self, BasepointMap, Dilation, MapJson, TheoremOutcome, VerdictJson};
use crate::error::{Error, Result};
use crate::freespace;
use crate::lipfunc;
use crate::metric::{self, Concavity, PointedMetricSpace, SpaceJson};
use crate::rational::{self, Rational};

const MAX_RETRIES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum ValueScheme {
    /// Distinct random points of `{0..=grid}²`, Euclidean distances rounded
    /// to `digits` decimals.
    EuclideanGrid { grid: u32, digits: u32 },
    /// Random integer weights in `1..=max_weight`, closed under shortest
    /// paths.
    RandomMetric { max_weight: u32 },
    /// The snowflake of another scheme.
    Holder {
        #[serde(with = "rational::serde_str")]
        alpha: Rational,
        digits: u32,
        base: Box<ValueScheme>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum MapScheme {
    /// Independent domain and codomain; images drawn point by point,
    /// rejecting any choice that expands a distance.
    RandomNonexpansive,
    /// The domain covers the codomain (plus up to two extra points) and
    /// its metric is the pulled-back one plus a line pseudometric.
    RandomSurjectiveNonexpansive,
    /// Codomain is the domain with every distance scaled by `k`.
    Dilation {
        #[serde(with = "rational::serde_str")]
        k: Rational,
    },
    /// Identity onto the codomain from a copy of it with some distances
    /// stretched.
    IdentityPlusNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenProfile {
    pub seed: u64,
    pub min_points: usize,
    pub max_points: usize,
    pub values: ValueScheme,
    pub maps: MapScheme,
}

impl GenProfile {
    pub fn new(seed: u64, points: std::ops::RangeInclusive<usize>, values: ValueScheme, maps: MapScheme) -> Self {
        GenProfile { seed, min_points: *points.start(), max_points: *points.end(), values, maps }
    }

    fn check(&self) -> Result<()> {
        if self.min_points == 0 || self.min_points > self.max_points {
            return Err(Error::Generation(format!(
                "point range {}..={} is empty or starts at 0",
                self.min_points, self.max_points
            )));
        }
        check_values(&self.values, self.max_points)?;
        if let MapScheme::Dilation { k } = &self.maps {
            if !k.is_positive() {
                return Err(Error::Generation(format!("dilation factor must be positive, got {k}")));
            }
        }
        Ok(())
    }
}

fn check_values(v: &ValueScheme, max_points: usize) -> Result<()> {
    match v {
        ValueScheme::EuclideanGrid { grid, digits } => {
            let cells = (*grid as usize + 1).pow(2);
            if cells < max_points {
                return Err(Error::Generation(format!(
                    "a {grid}x{grid} grid cannot hold {max_points} distinct points"
                )));
            }
            if *digits == 0 {
                return Err(Error::Generation("euclidean digits must be positive".into()));
            }
        }
        ValueScheme::RandomMetric { max_weight } => {
            if *max_weight == 0 {
                return Err(Error::Generation("max_weight must be positive".into()));
            }
        }
        ValueScheme::Holder { alpha, digits, base } => {
            if !alpha.is_positive() || *alpha >= Rational::one() || *digits == 0 {
                return Err(Error::Generation("Hölder needs 0 < alpha < 1 and digits > 0".into()));
            }
            check_values(base, max_points)?;
        }
    }
    Ok(())
}

/// A generated `(Y, X, φ)` triple with owned spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub index: usize,
    pub domain: PointedMetricSpace,
    pub codomain: PointedMetricSpace,
    pub images: Vec<usize>,
    /// Spaces thrown away because rounding broke the metric.
    pub discarded: usize,
    /// Image draws rejected for expanding a distance.
    pub rejections: usize,
}

impl Instance {
    pub fn map(&self) -> BasepointMap<'_> {
        BasepointMap::new(&self.domain, &self.codomain, self.images.clone())
            .expect("generated maps preserve basepoints")
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson {
            index: self.index,
            domain: SpaceJson::from_space(&self.domain),
            codomain: SpaceJson::from_space(&self.codomain),
            map: self.map().to_json(),
        }
    }
}

/// An instance in the space and map file formats, replayable through the
/// CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub index: usize,
    pub domain: SpaceJson,
    pub codomain: SpaceJson,
    pub map: MapJson,
}

impl InstanceJson {
    pub fn to_instance(&self) -> Result<Instance> {
        let domain = self.domain.to_space()?;
        let codomain = self.codomain.to_space()?;
        let images = self.map.bind(&domain, &codomain)?.images().to_vec();
        Ok(Instance { index: self.index, domain, codomain, images, discarded: 0, rejections: 0 })
    }
}

fn labels(n: usize, prefix: &str) -> Vec<String> {
    std::iter::once("e".to_string()).chain((1..n).map(|i| format!("{prefix}{i}"))).collect()
}

fn space_from(name: String, prefix: &str, dist: Vec<Vec<Rational>>) -> Result<PointedMetricSpace> {
    PointedMetricSpace::new(name, labels(dist.len(), prefix), 0, dist)
}

/// A fresh distance matrix on `n` points, plus the number of attempts
/// discarded on the way.
fn draw_metric(rng: &mut ChaCha8Rng, scheme: &ValueScheme, n: usize) -> Result<(Vec<Vec<Rational>>, usize)> {
    let mut discarded = 0;
    for _ in 0..MAX_RETRIES {
        let candidate = match scheme {
            ValueScheme::EuclideanGrid { grid, digits } => Some(euclidean(rng, *grid, *digits, n)),
            ValueScheme::RandomMetric { max_weight } => Some(random_metric(rng, *max_weight, n)),
            ValueScheme::Holder { alpha, digits, base } => {
                let (d, inner) = draw_metric(rng, base, n)?;
                discarded += inner;
                let s = PointedMetricSpace::from_matrix("base", d)?;
                s.holder_transform(alpha, *digits).ok().map(|h| h.matrix().to_vec())
            }
        };
        match candidate {
            Some(d) if PointedMetricSpace::from_matrix("probe", d.clone()).is_ok() => {
                return Ok((d, discarded))
            }
            _ => discarded += 1,
        }
    }
    Err(Error::Generation(format!("no valid metric after {MAX_RETRIES} attempts")))
}

fn euclidean(rng: &mut ChaCha8Rng, grid: u32, digits: u32, n: usize) -> Vec<Vec<Rational>> {
    let mut pts: Vec<(i64, i64)> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = (rng.gen_range(0..=grid as i64), rng.gen_range(0..=grid as i64));
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let half = rational::ratio(1, 2);
    let mut d = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            let sq = Rational::from_integer(BigInt::from(dx * dx + dy * dy));
            let v = metric::rounded_power(&sq, &half, digits);
            d[i][j] = v.clone();
            d[j][i] = v;
        }
    }
    d
}

fn random_metric(rng: &mut ChaCha8Rng, max_weight: u32, n: usize) -> Vec<Vec<Rational>> {
    let mut d = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rational::int(rng.gen_range(1..=max_weight as i64));
            d[i][j] = v.clone();
            d[j][i] = v;
        }
    }
    // shortest-path closure
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// `d_Y(u, v) = d_X(φu, φv) ⊕ c·|h(u) - h(v)|` with `⊕` either `+` or
/// `max`; `h` separates points sharing an image, so the result is a metric
/// and `φ` is nonexpansive.
fn lifted_metric(rng: &mut ChaCha8Rng, codomain: &[Vec<Rational>], images: &[usize]) -> Vec<Vec<Rational>> {
    let n = images.len();
    let mut h = vec![0i64; n];
    let sparse = rng.gen_bool(0.5);
    for x in 0..codomain.len() {
        let fiber: Vec<usize> = (0..n).filter(|&u| images[u] == x).collect();
        let mut levels: Vec<i64> = (0..=fiber.len() as i64).collect();
        levels.shuffle(rng);
        if fiber.len() == 1 && sparse {
            continue;
        }
        for (u, l) in fiber.iter().zip(levels) {
            h[*u] = l;
        }
    }
    let scale = [rational::ratio(1, 2), rational::int(1), rational::int(2)][rng.gen_range(0..3)].clone();
    let use_max = rng.gen_bool(0.5);
    let mut d = vec![vec![Rational::zero(); n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let pulled = codomain[images[u]][images[v]].clone();
            let noise = &scale * rational::int((h[u] - h[v]).abs());
            let val = if use_max { pulled.max(noise) } else { pulled + noise };
            d[u][v] = val.clone();
            d[v][u] = val;
        }
    }
    d
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Builds instance `index` of `profile`.
pub fn generate_one(profile: &GenProfile, index: usize) -> Result<Instance> {
    profile.check()?;
    let rng = &mut instance_rng(profile.seed, index);
    let (lo, hi) = (profile.min_points, profile.max_points);
    let xname = format!("X{index}");
    let yname = format!("Y{index}");
    let mut discarded = 0;
    let mut rejections = 0;

    let (domain, codomain, images) = match &profile.maps {
        MapScheme::RandomNonexpansive => {
            let (nx, ny) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
            let (dx, a) = draw_metric(rng, &profile.values, nx)?;
            let (dy, b) = draw_metric(rng, &profile.values, ny)?;
            discarded += a + b;
            let (images, r) = nonexpansive_images(rng, &dy, &dx);
            rejections += r;
            (space_from(yname, "y", dy)?, space_from(xname, "x", dx)?, images)
        }
        MapScheme::RandomSurjectiveNonexpansive => {
            let nx = rng.gen_range(lo..=hi);
            let extra = rng.gen_range(0..=2.min(hi - nx));
            let (dx, a) = draw_metric(rng, &profile.values, nx)?;
            discarded += a;
            let mut images: Vec<usize> = (0..nx).collect();
            images.extend((0..extra).map(|_| rng.gen_range(0..nx)));
            let dy = lifted_metric(rng, &dx, &images);
            (space_from(yname, "y", dy)?, space_from(xname, "x", dx)?, images)
        }
        MapScheme::IdentityPlusNoise => {
            let n = rng.gen_range(lo..=hi);
            let (dx, a) = draw_metric(rng, &profile.values, n)?;
            discarded += a;
            let images: Vec<usize> = (0..n).collect();
            let dy = lifted_metric(rng, &dx, &images);
            (space_from(yname, "y", dy)?, space_from(xname, "x", dx)?, images)
        }
        MapScheme::Dilation { k } => {
            let n = rng.gen_range(lo..=hi);
            let (dy, a) = draw_metric(rng, &profile.values, n)?;
            discarded += a;
            let dx = dy.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
            (space_from(yname, "y", dy)?, space_from(xname, "x", dx)?, (0..n).collect())
        }
    };
    Ok(Instance { index, domain, codomain, images, discarded, rejections })
}

/// Draws images one point at a time, never expanding a distance to an
/// earlier point. A dead end restarts the draw; after `MAX_RETRIES`
/// restarts the constant map is used.
fn nonexpansive_images(rng: &mut ChaCha8Rng, dy: &[Vec<Rational>], dx: &[Vec<Rational>]) -> (Vec<usize>, usize) {
    let ny = dy.len();
    let mut rejections = 0;
    'attempt: for _ in 0..MAX_RETRIES {
        let mut images = vec![0usize; ny];
        for u in 1..ny {
            let mut candidates: Vec<usize> = (0..dx.len()).collect();
            candidates.shuffle(rng);
            let ok = candidates
                .into_iter()
                .find(|&x| (0..u).all(|v| dx[x][images[v]] <= dy[u][v]));
            match ok {
                Some(x) => images[u] = x,
                None => {
                    rejections += 1;
                    continue 'attempt;
                }
            }
        }
        return (images, rejections);
    }
    (vec![0; ny], rejections)
}

pub fn generate(profile: &GenProfile, count: usize) -> Result<Vec<Instance>> {
    (0..count).into_par_iter().map(|i| generate_one(profile, i)).collect()
}

/// Applicability and outcome counts for one property.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub applicable: usize,
    pub held: usize,
    pub violated: usize,
}

/// A failing property with everything needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyBundle {
    pub property: String,
    pub instance: InstanceJson,
    pub oracle: Option<VerdictJson>,
    pub theorem: Option<VerdictJson>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub profile: Option<GenProfile>,
    pub instances: usize,
    pub discarded: usize,
    pub rejections: usize,
    pub peak_codomains: usize,
    pub oracle_isometric: usize,
    pub theorem_inconclusive: usize,
    pub peak_certificates: usize,
    pub isometry_certificates: usize,
    pub properties: BTreeMap<String, Tally>,
    pub anomalies: Vec<AnomalyBundle>,
}

impl RunReport {
    pub fn tally(&self, property: &str) -> Tally {
        self.properties.get(property).cloned().unwrap_or_default()
    }

    fn merge(&mut self, o: InstanceOutcome) {
        self.instances += 1;
        self.discarded += o.discarded;
        self.rejections += o.rejections;
        self.peak_codomains += o.peak_codomain as usize;
        self.oracle_isometric += o.oracle_isometric as usize;
        self.theorem_inconclusive += o.theorem_inconclusive as usize;
        self.peak_certificates += o.peak_certificates;
        self.isometry_certificates += o.isometry_certificates;
        for (name, applicable, held) in o.checks {
            let t = self.properties.entry(name.to_string()).or_default();
            if applicable {
                t.applicable += 1;
                if held {
                    t.held += 1;
                } else {
                    t.violated += 1;
                }
            }
        }
        self.anomalies.extend(o.anomalies);
    }
}

/// Names of the per-instance properties, as they appear in reports.
pub mod property {
    pub const M_IMPLIES_ISOMETRY: &str = "nonexpansive_with_m_implies_isometric";
    pub const PEAK_EQUIVALENCE: &str = "peak_codomain_isometric_iff_nonexpansive_with_m";
    pub const ISOMETRY_IMPLIES_SURJECTIVE: &str = "isometry_implies_nonexpansive_surjective";
    pub const OPERATOR_NORM: &str = "operator_norm_matches_nonexpansive";
    pub const UNIT_DILATION: &str = "surjective_unit_dilation_is_isometric";
    pub const ISOMETRY_CERTIFICATES: &str = "isometry_certificates_verify";
    pub const ROUTES_AGREE: &str = "theorem_route_agrees_with_oracle";
    pub const CONCAVE_EXTREME: &str = "concave_iff_all_molecules_extreme";
    pub const PEAK_EXPOSED: &str = "peak_property_iff_all_molecules_exposed";
    pub const TRIANGLE_SCAN: &str = "extreme_lp_matches_triangle_scan";
    pub const EXTREME_SYMMETRY: &str = "extreme_sign_symmetric";
    pub const EXPOSED_SYMMETRY: &str = "exposed_sign_symmetric";
    pub const EXPOSED_EXTREME: &str = "exposed_implies_extreme";
    pub const PEAKING_EXPOSED: &str = "peaking_iff_exposed";
    pub const PEAK_CERTIFICATES: &str = "peak_certificates_verify";
    pub const UNIFORM_CONCAVITY: &str = "uniform_concavity_matches_concavity";
}

struct InstanceOutcome {
    discarded: usize,
    rejections: usize,
    peak_codomain: bool,
    oracle_isometric: bool,
    theorem_inconclusive: bool,
    peak_certificates: usize,
    isometry_certificates: usize,
    checks: Vec<(&'static str, bool, bool)>,
    anomalies: Vec<AnomalyBundle>,
}

/// Evaluates every map and codomain property on one instance.
fn evaluate(inst: &Instance) -> Result<InstanceOutcome> {
    use property::*;
    let map = inst.map();
    let x = &inst.codomain;
    let mut checks: Vec<(&'static str, bool, bool)> = Vec::new();
    let mut details: Vec<(&'static str, String)> = Vec::new();
    let mut check = |name: &'static str, applicable: bool, held: bool, detail: String| {
        checks.push((name, applicable, held));
        if applicable && !held {
            details.push((name, detail));
        }
    };

    // ---- map properties ----
    let nonexpansive = map.check_nonexpansive().nonexpansive;
    let m = map.check_property_m().holds;
    let surjective = map.is_surjective();
    let oracle = compop::isometry_oracle(&map)?;
    let theorem = compop::isometry_via_theorem(&map)?;
    let peak = lipfunc::has_peak_property(x)?;

    check(M_IMPLIES_ISOMETRY, nonexpansive && m, oracle.isometric, "nonexpansive with (M) but oracle says not isometric".into());
    check(
        PEAK_EQUIVALENCE,
        peak.holds,
        oracle.isometric == (nonexpansive && m),
        format!("oracle {} vs nonexpansive∧(M) {}", oracle.isometric, nonexpansive && m),
    );
    check(
        ISOMETRY_IMPLIES_SURJECTIVE,
        oracle.isometric && !oracle.degenerate,
        nonexpansive && surjective,
        format!("isometric but nonexpansive={nonexpansive} surjective={surjective}"),
    );
    check(
        OPERATOR_NORM,
        true,
        (map.operator_norm() <= Rational::one()) == nonexpansive,
        format!("Lip(φ) = {}", map.operator_norm()),
    );
    let unit_dilation = inst.domain.len() >= 2
        && matches!(map.detect_dilation()?, Dilation::Dilation { ref k } if k.is_one());
    check(UNIT_DILATION, unit_dilation && surjective, oracle.isometric, "surjective 1-dilation not isometric".into());

    let mut certs = vec![&oracle];
    if let Some(v) = theorem.verdict() {
        certs.push(v);
    }
    let mut certs_ok = true;
    for v in &certs {
        certs_ok &= compop::verify_certificate(v, &map)?.is_confirmed();
    }
    check(ISOMETRY_CERTIFICATES, true, certs_ok, "an isometry certificate failed verification".into());
    let theorem_verdict = theorem.verdict().map(|v| v.isometric);
    check(
        ROUTES_AGREE,
        theorem_verdict.is_some(),
        theorem_verdict == Some(oracle.isometric),
        format!("theorem {theorem_verdict:?} vs oracle {}", oracle.isometric),
    );

    // ---- codomain (free-space) properties ----
    let mut peak_certificates = 0;
    if x.len() >= 2 {
        let pairs: Vec<_> = x.ordered_pairs().collect();
        let mut extreme = BTreeMap::new();
        let mut exposed = BTreeMap::new();
        let mut peaking = BTreeMap::new();
        let mut peak_certs_ok = peak.certificates.iter().all(lipfunc::PeakCertificate::verify);
        peak_certificates += peak.certificates.len();
        for &p in &pairs {
            extreme.insert(p, freespace::is_extreme_molecule(x, p)?.is_extreme());
            exposed.insert(p, freespace::is_exposed_molecule(x, p)?.is_exposed());
        }
        for p in x.unordered_pairs() {
            let c = lipfunc::construct_peaking(x, p)?;
            if let Some(c) = &c {
                peak_certs_ok &= c.verify();
                peak_certificates += 1;
            }
            peaking.insert(p, c.is_some());
        }
        let all_extreme = extreme.values().all(|&b| b);
        let all_exposed = exposed.values().all(|&b| b);
        let concave = x.check_concave() == Concavity::Concave;
        check(CONCAVE_EXTREME, true, concave == all_extreme, format!("concave={concave} all_extreme={all_extreme}"));
        check(PEAK_EXPOSED, true, peak.holds == all_exposed, format!("peak={} all_exposed={all_exposed}", peak.holds));
        let scan_ok = pairs.iter().all(|&p| extreme[&p] == freespace::strict_triangle_scan(x, p));
        check(TRIANGLE_SCAN, true, scan_ok, "extreme LP and triangle scan disagree".into());
        check(EXTREME_SYMMETRY, true, pairs.iter().all(|&p| extreme[&p] == extreme[&p.reversed()]), String::new());
        check(EXPOSED_SYMMETRY, true, pairs.iter().all(|&p| exposed[&p] == exposed[&p.reversed()]), String::new());
        check(EXPOSED_EXTREME, true, pairs.iter().all(|&p| !exposed[&p] || extreme[&p]), String::new());
        check(
            PEAKING_EXPOSED,
            true,
            peaking.iter().all(|(p, &b)| b == exposed[p] && b == exposed[&p.reversed()]),
            String::new(),
        );
        check(PEAK_CERTIFICATES, true, peak_certs_ok, "a peaking certificate failed verification".into());
        check(
            UNIFORM_CONCAVITY,
            true,
            x.check_uniformly_concave().uniformly_concave == concave,
            String::new(),
        );
    }

    let oracle_json = oracle.to_json(&map);
    let theorem_json = theorem.verdict().map(|v| v.to_json(&map));
    let anomalies = details
        .into_iter()
        .map(|(property, detail)| AnomalyBundle {
            property: property.to_string(),
            instance: inst.to_json(),
            oracle: Some(oracle_json.clone()),
            theorem: theorem_json.clone(),
            detail,
        })
        .collect();
    Ok(InstanceOutcome {
        discarded: inst.discarded,
        rejections: inst.rejections,
        peak_codomain: peak.holds,
        oracle_isometric: oracle.isometric,
        theorem_inconclusive: matches!(theorem, TheoremOutcome::Inconclusive { .. }),
        peak_certificates,
        isometry_certificates: certs.len(),
        checks,
        anomalies,
    })
}

/// Generates `count` instances and evaluates every property on each.
/// Anomalies are collected, never dropped.
pub fn run_corpus(profile: &GenProfile, count: usize) -> Result<RunReport> {
    let outcomes = (0..count)
        .into_par_iter()
        .map(|i| generate_one(profile, i).and_then(|inst| evaluate(&inst)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = RunReport { profile: Some(profile.clone()), ..RunReport::default() };
    for o in outcomes {
        report.merge(o);
    }
    Ok(report)
}

/// Runs several profiles and merges their reports in order.
pub fn run_corpora(runs: &[(GenProfile, usize)]) -> Result<RunReport> {
    let mut report = RunReport::default();
    for (profile, count) in runs {
        let r = run_corpus(profile, *count)?;
        report.instances += r.instances;
        report.discarded += r.discarded;
        report.rejections += r.rejections;
        report.peak_codomains += r.peak_codomains;
        report.oracle_isometric += r.oracle_isometric;
        report.theorem_inconclusive += r.theorem_inconclusive;
        report.peak_certificates += r.peak_certificates;
        report.isometry_certificates += r.isometry_certificates;
        for (k, t) in r.properties {
            let e = report.properties.entry(k).or_default();
            e.applicable += t.applicable;
            e.held += t.held;
            e.violated += t.violated;
        }
        report.anomalies.extend(r.anomalies);
    }
    Ok(report)
}

/// Re-evaluates an anomaly from its serialized form alone. `Ok(true)` means
/// the property still fails on the replayed instance.
pub fn replay_anomaly(bundle: &AnomalyBundle) -> Result<bool> {
    let inst = bundle.instance.to_instance()?;
    let outcome = evaluate(&inst)?;
    Ok(outcome
        .checks
        .iter()
        .any(|(name, applicable, held)| *name == bundle.property && *applicable && !*held))
}

/// An isometric map whose codomain lacks the peak property and which fails
/// property (M).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBundle {
    pub instance: InstanceJson,
    pub oracle: VerdictJson,
    /// Codomain pairs with no distance-preserving preimage pair.
    pub unmatched: Vec<[String; 2]>,
    /// Codomain pair admitting no peaking function.
    pub peak_failure: [String; 2],
}

impl WitnessBundle {
    /// Replays the witness: the certificate confirms, (M) fails at the
    /// listed pairs and the codomain lacks the peak property.
    pub fn verify(&self) -> Result<bool> {
        let inst = self.instance.to_instance()?;
        let map = inst.map();
        let verdict = self.oracle.bind(&map)?;
        let m = map.check_property_m();
        let unmatched: Vec<[String; 2]> = m
            .entries
            .iter()
            .filter(|e| e.witness.is_none())
            .map(|e| {
                let (a, b) = inst.codomain.pair_labels(e.pair);
                [a, b]
            })
            .collect();
        let peak_pair = inst.codomain.pair_by_labels(&self.peak_failure[0], &self.peak_failure[1])?;
        Ok(verdict.isometric
            && compop::verify_certificate(&verdict, &map)?.is_confirmed()
            && !m.holds
            && unmatched == self.unmatched
            && lipfunc::construct_peaking(&inst.codomain, peak_pair)?.is_none())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Witness { examined: usize, witness: Box<WitnessBundle> },
    Exhausted { examined: usize, inconclusive_region: usize },
}

/// Scans instances `0..budget` in order for an isometric map without
/// property (M). Only codomains without the peak property can produce one.
pub fn search_open_question(profile: &GenProfile, budget: usize) -> Result<SearchOutcome> {
    let mut inconclusive_region = 0;
    for i in 0..budget {
        let inst = generate_one(profile, i)?;
        let map = inst.map();
        let theorem = compop::isometry_via_theorem(&map)?;
        if !matches!(theorem, TheoremOutcome::Inconclusive { .. }) {
            continue;
        }
        inconclusive_region += 1;
        let oracle = compop::isometry_oracle(&map)?;
        let m = map.check_property_m();
        if oracle.isometric && !m.holds {
            if !compop::verify_certificate(&oracle, &map)?.is_confirmed() {
                return Err(Error::inconsistency("witness certificate failed verification"));
            }
            let peak_pair = lipfunc::has_peak_property(&inst.codomain)?
                .witness
                .ok_or_else(|| Error::inconsistency("inconclusive region but peak property holds"))?;
            let (a, b) = inst.codomain.pair_labels(peak_pair);
            let unmatched = m
                .entries
                .iter()
                .filter(|e| e.witness.is_none())
                .map(|e| {
                    let (a, b) = inst.codomain.pair_labels(e.pair);
                    [a, b]
                })
                .collect();
            let witness = WitnessBundle {
                instance: inst.to_json(),
                oracle: oracle.to_json(&map),
                unmatched,
                peak_failure: [a, b],
            };
            return Ok(SearchOutcome::Witness { examined: i + 1, witness: Box::new(witness) });
        }
    }
    Ok(SearchOutcome::Exhausted { examined: budget, inconclusive_region })
}
