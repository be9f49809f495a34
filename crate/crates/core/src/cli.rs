//! The `lipcomp` command line: argument parsing and dispatch, kept in the
//! library so it can be driven in-process.
//!
//! Every subcommand prints one JSON document on standard output. Exit
//! codes: 0 when the command ran (negative verdicts included), 2 for
//! invalid input or usage, 3 for an internal inconsistency.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::compop::{self, BasepointMap, Dilation, MapJson, Method, TheoremOutcome, VerdictJson};
use crate::error::{Error, Result};
use crate::freespace;
use crate::harness::{self, GenProfile, MapScheme, ValueScheme};
use crate::lipfunc::{self, PeakCertificateJson};
use crate::metric::{Concavity, PointedMetricSpace, SpaceJson};
use crate::rational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lipcomp", version, about = "Exact decisions for Lipschitz spaces over finite pointed metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the metric axioms of a space file.
    Validate {
        #[arg(long)]
        space: PathBuf,
    },
    /// Concavity and uniform concavity of a space.
    Concave {
        #[arg(long)]
        space: PathBuf,
    },
    /// Peaking functions for one pair, or the peak property of the space.
    Peak {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, num_args = 2, value_names = ["X", "Y"], conflicts_with_all = ["all", "verify"])]
        pair: Option<Vec<String>>,
        #[arg(long, conflicts_with = "verify")]
        all: bool,
        /// Re-check a peak certificate file against the space.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Extreme/exposed classification of every molecule.
    Molecules {
        #[arg(long)]
        space: PathBuf,
    },
    /// Property (M) for a map.
    PropertyM(MapArgs),
    /// Whether the composition operator of a map is an isometry.
    Isometry {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Re-check a verdict file (such as this command's own output).
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Whether a map scales every distance by one constant.
    Dilation(MapArgs),
    /// The rounded snowflake `d^alpha` of a space.
    Holder {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        digits: u32,
    },
    /// Generate a corpus and tally every property over it.
    Corpus {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Also write the report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Look for an isometric map without property (M).
    Search {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    map: PathBuf,
    /// Domain then codomain space files.
    #[arg(long, num_args = 2, value_names = ["Y", "X"], required = true)]
    spaces: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Oracle,
    Theorem,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Theorem => Method::Theorem,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ValuesArg {
    Euclidean,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MapsArg {
    Nonexpansive,
    Surjective,
    Dilation,
    IdentityNoise,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Profile file; overrides every other generation flag.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    min_points: usize,
    #[arg(long, default_value_t = 5)]
    max_points: usize,
    #[arg(long, value_enum, default_value_t = ValuesArg::Random)]
    values: ValuesArg,
    #[arg(long, default_value_t = 6)]
    grid: u32,
    #[arg(long, default_value_t = 3)]
    max_weight: u32,
    /// Decimal digits kept when rounding irrational distances.
    #[arg(long, default_value_t = 6)]
    digits: u32,
    /// Apply the snowflake transform with this exponent.
    #[arg(long)]
    holder: Option<String>,
    #[arg(long, value_enum, default_value_t = MapsArg::Surjective)]
    maps: MapsArg,
    /// Dilation factor for `--maps dilation`.
    #[arg(long, default_value = "1/2")]
    k: String,
}

impl ProfileArgs {
    fn build(&self) -> Result<GenProfile> {
        if let Some(path) = &self.profile {
            return Ok(serde_json::from_value(read_json(path)?)?);
        }
        let mut values = match self.values {
            ValuesArg::Euclidean => ValueScheme::EuclideanGrid { grid: self.grid, digits: self.digits },
            ValuesArg::Random => ValueScheme::RandomMetric { max_weight: self.max_weight },
        };
        if let Some(alpha) = &self.holder {
            values = ValueScheme::Holder { alpha: rational::parse(alpha)?, digits: self.digits, base: Box::new(values) };
        }
        let maps = match self.maps {
            MapsArg::Nonexpansive => MapScheme::RandomNonexpansive,
            MapsArg::Surjective => MapScheme::RandomSurjectiveNonexpansive,
            MapsArg::Dilation => MapScheme::Dilation { k: rational::parse(&self.k)? },
            MapsArg::IdentityNoise => MapScheme::IdentityPlusNoise,
        };
        Ok(GenProfile { seed: self.seed, min_points: self.min_points, max_points: self.max_points, values, maps })
    }
}

/// What one invocation produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.command) {
        Ok((code, value, note)) => Outcome { code, stdout: render(&value), stderr: note },
        Err(e) => {
            let code = match e {
                Error::Inconsistency(_) => EXIT_INCONSISTENT,
                _ => EXIT_INVALID,
            };
            let body = json!({ "error": error_kind(&e), "message": e.to_string() });
            Outcome { code, stdout: render(&body), stderr: format!("lipcomp: {e}\n") }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Input(_) => "invalid_input",
        Error::EmptyDomain(_) => "empty_domain",
        Error::Generation(_) => "generation",
        Error::Inconsistency(_) => "inconsistency",
        Error::Json(_) => "json",
        Error::Io(_) => "io",
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_value(read_json(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_space(path: &Path) -> Result<PointedMetricSpace> {
    read::<SpaceJson>(path)?.to_space()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn pair_json(space: &PointedMetricSpace, p: crate::PairIndex) -> Value {
    let (a, b) = space.pair_labels(p);
    json!([a, b])
}

fn write_output(path: &Option<PathBuf>, v: &Value) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, render(v))?;
    }
    Ok(())
}

type Dispatched = (i32, Value, String);

fn ok(v: Value) -> Result<Dispatched> {
    Ok((EXIT_OK, v, String::new()))
}

fn dispatch(command: Command) -> Result<Dispatched> {
    match command {
        Command::Validate { space } => {
            let s = read::<SpaceJson>(&space)?.to_space_unchecked()?;
            match s.validate()? {
                None => ok(json!({ "valid": true, "name": s.name(), "points": s.len() })),
                Some(v) => Ok((
                    EXIT_INVALID,
                    json!({ "valid": false, "violation": v.kind(), "message": v.to_string() }),
                    format!("lipcomp: space {:?}: {v}\n", s.name()),
                )),
            }
        }
        Command::Concave { space } => {
            let s = read_space(&space)?;
            let u = s.check_uniformly_concave();
            let witness = match s.check_concave() {
                Concavity::Concave => Value::Null,
                Concavity::NotConcave { x, z, y } => json!([s.label(x), s.label(z), s.label(y)]),
            };
            ok(json!({
                "concave": witness.is_null(),
                "witness": witness,
                "uniformly_concave": u.uniformly_concave,
                "min_slack": u.min_slack.as_ref().map(rational::format),
            }))
        }
        Command::Peak { space, pair, all: _, verify } => {
            let s = read_space(&space)?;
            if let Some(path) = verify {
                let cert = read::<PeakCertificateJson>(&path)?.bind(&s)?;
                return ok(json!({ "confirmed": cert.verify() }));
            }
            if let Some(pair) = pair {
                let p = s.pair_by_labels(&pair[0], &pair[1])?;
                let cert = lipfunc::construct_peaking(&s, p)?;
                return ok(json!({
                    "pair": pair_json(&s, p),
                    "peaking": cert.is_some(),
                    "certificate": cert.map(|c| to_value(&c.to_json())),
                }));
            }
            let peak = lipfunc::has_peak_property(&s)?;
            ok(json!({
                "peak_property": peak.holds,
                "witness": peak.witness.map(|p| pair_json(&s, p)),
                "certificates": peak.certificates.iter().map(|c| to_value(&c.to_json())).collect::<Vec<_>>(),
            }))
        }
        Command::Molecules { space } => {
            let s = read_space(&space)?;
            ok(json!({ "space": s.name(), "molecules": to_value(&freespace::classify(&s)?) }))
        }
        Command::PropertyM(args) => {
            let (y, x, mj) = args.load()?;
            let map = mj.bind(&y, &x)?;
            let report = map.check_property_m();
            let entries: Vec<Value> = report
                .entries
                .iter()
                .map(|e| json!({ "pair": pair_json(&x, e.pair), "witness": e.witness.map(|w| pair_json(&y, w)) }))
                .collect();
            ok(json!({
                "property_m": report.holds,
                "first_unmatched": report.first_unmatched().map(|p| pair_json(&x, p)),
                "entries": entries,
            }))
        }
        Command::Isometry { map, method, verify } => {
            let (y, x, mj) = map.load()?;
            let map = mj.bind(&y, &x)?;
            if let Some(path) = verify {
                let verdict = read::<VerdictJson>(&path)?.bind(&map)?;
                return ok(match compop::verify_certificate(&verdict, &map)? {
                    compop::CertificateCheck::Confirmed => json!({ "confirmed": true }),
                    compop::CertificateCheck::Refuted(reason) => json!({ "confirmed": false, "reason": reason }),
                });
            }
            ok(isometry_report(&map, method.into())?)
        }
        Command::Dilation(args) => {
            let (y, x, mj) = args.load()?;
            let map = mj.bind(&y, &x)?;
            ok(match map.detect_dilation()? {
                Dilation::Dilation { k } => json!({ "dilation": true, "k": rational::format(&k) }),
                Dilation::NotDilation { first, second } => json!({
                    "dilation": false,
                    "pairs": std::iter::once(first).chain(second).map(|p| pair_json(&y, p)).collect::<Vec<_>>(),
                }),
            })
        }
        Command::Holder { space, alpha, digits } => {
            let s = read_space(&space)?;
            let h = s.holder_transform(&rational::parse(&alpha)?, digits)?;
            ok(to_value(&SpaceJson::from_space(&h)))
        }
        Command::Corpus { profile, count, output } => {
            let report = harness::run_corpus(&profile.build()?, count)?;
            let v = to_value(&report);
            write_output(&output, &v)?;
            ok(v)
        }
        Command::Search { profile, budget, output } => {
            let outcome = harness::search_open_question(&profile.build()?, budget)?;
            let v = to_value(&outcome);
            write_output(&output, &v)?;
            ok(v)
        }
    }
}

impl MapArgs {
    fn load(&self) -> Result<(PointedMetricSpace, PointedMetricSpace, MapJson)> {
        Ok((read_space(&self.spaces[0])?, read_space(&self.spaces[1])?, read(&self.map)?))
    }
}

/// The `isometry` subcommand's output: the verdict JSON plus `lip_phi`,
/// the individual hypotheses, surjectivity and the theorem route's answer.
pub fn isometry_report(map: &BasepointMap, method: Method) -> Result<Value> {
    let decision = compop::decide_isometry(map, method)?;
    let mut out = to_value(&decision.verdict.to_json(map));
    let obj = out.as_object_mut().expect("verdict is an object");
    obj.insert("lip_phi".into(), json!(rational::format(&map.operator_norm())));
    obj.insert("nonexpansive".into(), json!(map.check_nonexpansive().nonexpansive));
    obj.insert("property_m".into(), json!(map.check_property_m().holds));
    obj.insert("surjective".into(), json!(map.is_surjective()));
    if let Some(t) = &decision.theorem {
        obj.insert(
            "theorem".into(),
            match t {
                TheoremOutcome::Decided(v) => json!({ "outcome": "decided", "isometric": v.isometric }),
                TheoremOutcome::Inconclusive { .. } => json!({ "outcome": "inconclusive" }),
            },
        );
    }
    Ok(out)
}
