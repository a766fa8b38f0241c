//! Benchmark configuration: JSON in, validated grid out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{Map, Value};

use super::data::DEFAULT_MISSING_TOKEN;
use super::synth::SynthSpec;
use super::BenchError;
use crate::diagnostics::FunctionOfInterest;
use crate::nuts::SamplerConfig;
use crate::param::ParamKind;

pub const DEFAULT_RUNS: usize = 8;
pub const DEFAULT_OUTPUT: &str = "records.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Uniform,
    Eigenmodel,
    Ppca,
    Mc,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Uniform,
        ProblemKind::Eigenmodel,
        ProblemKind::Ppca,
        ProblemKind::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Uniform => "uniform",
            ProblemKind::Eigenmodel => "eigenmodel",
            ProblemKind::Ppca => "ppca",
            ProblemKind::Mc => "mc",
        }
    }

    /// Numeric code used in CSV tables.
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SynthSpec),
    Files {
        path: PathBuf,
        covariates: Vec<PathBuf>,
        missing_token: String,
    },
}

/// One `(problem, J, K)` cell of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub kind: ProblemKind,
    pub j: usize,
    pub k: usize,
    /// `T` for panels, `N` for PPCA; absent otherwise.
    pub t: Option<usize>,
    pub source: DataSource,
    pub kinds: Vec<ParamKind>,
    /// PPCA: keep `λ` descending.
    pub ordered: bool,
    /// PPCA: include a mean vector.
    pub with_mean: bool,
    /// Matrix completion: rate of the exponential prior on `λ`.
    pub eta: f64,
}

impl Problem {
    /// Stable identity used for seeding and resume.
    pub fn key(&self) -> String {
        match self.t {
            Some(t) => format!("{}|{}|{}|{}", self.kind.name(), self.j, self.k, t),
            None => format!("{}|{}|{}", self.kind.name(), self.j, self.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub problems: Vec<Problem>,
    pub runs: usize,
    pub sampler: SamplerConfig,
    pub base_seed: u64,
    /// Records CSV.
    pub output: PathBuf,
    pub foi: FunctionOfInterest,
    /// Draw a fresh synthetic dataset for every run instead of one per problem.
    pub regenerate_data: bool,
    pub givens_area_correction: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum KindsSpec {
    Named(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    problem: ProblemKind,
    #[serde(rename = "J")]
    j: Option<usize>,
    #[serde(rename = "K")]
    k: Option<OneOrMany>,
    #[serde(rename = "T")]
    t: Option<usize>,
    #[serde(rename = "N")]
    n: Option<usize>,
    preset: Option<String>,
    data: Option<PathBuf>,
    covariates: Option<Vec<PathBuf>>,
    missing_token: Option<String>,
    lambda: Option<Vec<f64>>,
    sigma: Option<f64>,
    mu: Option<f64>,
    beta: Option<Vec<f64>>,
    missing_fraction: Option<f64>,
    with_mean: Option<bool>,
    ordered: Option<bool>,
    eta: Option<f64>,
    kinds: Option<KindsSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGlobal {
    #[serde(default)]
    problems: Vec<Value>,
    kinds: Option<KindsSpec>,
    runs: Option<usize>,
    #[serde(default)]
    sampler: SamplerConfig,
    #[serde(default)]
    base_seed: u64,
    output: Option<PathBuf>,
    #[serde(default)]
    foi: FunctionOfInterest,
    #[serde(default)]
    regenerate_data: bool,
    #[serde(default)]
    givens_area_correction: bool,
}

const GLOBAL_KEYS: [&str; 9] = [
    "problems",
    "kinds",
    "runs",
    "sampler",
    "base_seed",
    "output",
    "foi",
    "regenerate_data",
    "givens_area_correction",
];

fn err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

/// Reads and validates a JSON config. Relative paths inside it resolve
/// against the config file's directory.
pub fn load_config(path: &Path) -> Result<BenchConfig, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        BenchError::Config(m) => BenchError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses config text. Either a `problems` list or a single problem's
/// keys at the top level are accepted.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<BenchConfig, BenchError> {
    let value: Value = serde_json::from_str(text).map_err(|e| err(format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(err("top level must be a JSON object"));
    };
    if !obj.contains_key("problems") {
        let problem: Map<String, Value> = obj
            .iter()
            .filter(|(k, _)| !GLOBAL_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if problem.is_empty() {
            return Err(err("missing required key \"problems\" (or a top-level \"problem\")"));
        }
        obj.retain(|k, _| GLOBAL_KEYS.contains(&k.as_str()));
        obj.insert("problems".into(), Value::Array(vec![Value::Object(problem)]));
    }
    let raw: RawGlobal = serde_json::from_value(Value::Object(obj)).map_err(|e| err(e.to_string()))?;
    raw.sampler
        .validate()
        .map_err(|e| err(format!("sampler: {e}")))?;
    if raw.sampler.seed != 0 {
        return Err(err("sampler.seed: per-run seeds derive from base_seed; set base_seed instead"));
    }
    let runs = raw.runs.unwrap_or(DEFAULT_RUNS);
    if runs == 0 {
        return Err(err("runs: must be at least 1"));
    }
    if raw.problems.is_empty() {
        return Err(err("problems: at least one problem is required"));
    }
    let global_kinds = raw.kinds.as_ref().map(parse_kinds).transpose().map_err(|m| err(format!("kinds: {m}")))?;
    let mut problems = Vec::new();
    for (i, v) in raw.problems.iter().enumerate() {
        let ctx = |m: String| err(format!("problems[{i}]: {m}"));
        let rp: RawProblem = serde_json::from_value(v.clone()).map_err(|e| ctx(e.to_string()))?;
        problems.extend(validate_problem(rp, global_kinds.as_ref(), base_dir).map_err(ctx)?);
    }
    let mut keys: Vec<String> = problems.iter().map(Problem::key).collect();
    keys.sort();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(err(format!("problems: duplicate problem {}", w[0])));
    }
    let output = raw.output.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    Ok(BenchConfig {
        problems,
        runs,
        sampler: raw.sampler,
        base_seed: raw.base_seed,
        output: resolve(base_dir, output),
        foi: raw.foi,
        regenerate_data: raw.regenerate_data,
        givens_area_correction: raw.givens_area_correction,
    })
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// `None` means "all".
fn parse_kinds(spec: &KindsSpec) -> Result<Option<Vec<ParamKind>>, String> {
    match spec {
        KindsSpec::Named(s) if s == "all" => Ok(None),
        KindsSpec::Named(s) => s.parse::<ParamKind>().map(|k| Some(vec![k])).map_err(|e| e.to_string()),
        KindsSpec::List(list) => {
            if list.is_empty() {
                return Err("empty list".into());
            }
            let mut out = Vec::new();
            for s in list {
                let k: ParamKind = s.parse().map_err(|e: crate::param::ParamError| e.to_string())?;
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            out.sort();
            Ok(Some(out))
        }
    }
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("missing required key \"{key}\""))
}

fn forbid<T>(v: &Option<T>, key: &str, kind: ProblemKind) -> Result<(), String> {
    if v.is_some() {
        return Err(format!("key \"{key}\" is not used by problem \"{}\"", kind.name()));
    }
    Ok(())
}

fn check_lambda(lambda: &[f64], k: usize, positive: bool) -> Result<(), String> {
    if lambda.len() != k {
        return Err(format!("\"lambda\" has {} entries, expected K={k}", lambda.len()));
    }
    if lambda.iter().any(|v| !v.is_finite() || (positive && *v <= 0.0)) {
        return Err("\"lambda\" entries must be finite and positive".into());
    }
    Ok(())
}

fn validate_problem(mut rp: RawProblem, global: Option<&Option<Vec<ParamKind>>>, base: &Path) -> Result<Vec<Problem>, String> {
    let kind = rp.problem;
    let preset = match (&rp.preset, kind) {
        (None, _) => None,
        (Some(p), ProblemKind::Ppca) => Some(match p.as_str() {
            "synthetic1" => SynthSpec::ppca_synthetic1(),
            "synthetic2" => SynthSpec::ppca_synthetic2(),
            other => return Err(format!("unknown \"preset\" '{other}' (expected synthetic1 or synthetic2)")),
        }),
        (Some(_), _) => return Err(format!("key \"preset\" is not used by problem \"{}\"", kind.name())),
    };
    let (j, ks) = match &preset {
        Some(SynthSpec::Ppca { j, k, .. }) => {
            if rp.j.is_some_and(|v| v != *j) {
                return Err(format!("\"J\" conflicts with the preset (J={j})"));
            }
            (*j, vec![*k])
        }
        _ => {
            let j = require(rp.j, "J")?;
            let ks = match require(rp.k.take(), "K")? {
                OneOrMany::One(k) => vec![k],
                OneOrMany::Many(ks) if !ks.is_empty() => ks,
                OneOrMany::Many(_) => return Err("\"K\" list is empty".into()),
            };
            (j, ks)
        }
    };
    if j == 0 {
        return Err("\"J\" must be at least 1".into());
    }

    match kind {
        ProblemKind::Uniform => {
            for (v, key) in [(&rp.t, "T"), (&rp.n, "N")] {
                forbid(v, key, kind)?;
            }
            forbid(&rp.data, "data", kind)?;
            forbid(&rp.lambda, "lambda", kind)?;
            forbid(&rp.sigma, "sigma", kind)?;
        }
        ProblemKind::Eigenmodel => {
            forbid(&rp.t, "T", kind)?;
            forbid(&rp.n, "N", kind)?;
            forbid(&rp.sigma, "sigma", kind)?;
        }
        ProblemKind::Ppca => {
            forbid(&rp.t, "T", kind)?;
            forbid(&rp.mu, "mu", kind)?;
        }
        ProblemKind::Mc => {
            forbid(&rp.n, "N", kind)?;
            forbid(&rp.mu, "mu", kind)?;
        }
    }
    if kind != ProblemKind::Mc {
        forbid(&rp.beta, "beta", kind)?;
        forbid(&rp.missing_fraction, "missing_fraction", kind)?;
        forbid(&rp.eta, "eta", kind)?;
        forbid(&rp.covariates, "covariates", kind)?;
    }
    if kind != ProblemKind::Ppca {
        forbid(&rp.with_mean, "with_mean", kind)?;
        forbid(&rp.ordered, "ordered", kind)?;
    }
    if rp.data.is_none() {
        forbid(&rp.missing_token, "missing_token", kind)?;
        forbid(&rp.covariates, "covariates", kind)?;
    } else {
        for (present, key) in [
            (rp.lambda.is_some(), "lambda"),
            (rp.sigma.is_some(), "sigma"),
            (rp.mu.is_some(), "mu"),
            (rp.beta.is_some(), "beta"),
            (rp.missing_fraction.is_some(), "missing_fraction"),
            (preset.is_some(), "preset"),
        ] {
            if present {
                return Err(format!("key \"{key}\" only applies to synthetic data, but \"data\" is set"));
            }
        }
    }

    let kinds_spec = match &rp.kinds {
        Some(s) => parse_kinds(s).map_err(|m| format!("kinds: {m}"))?,
        None => global.cloned().flatten(),
    };
    let eta = rp.eta.unwrap_or(1.0);
    if !(eta > 0.0) {
        return Err("\"eta\" must be positive".into());
    }
    let with_mean = rp.with_mean.unwrap_or(false);

    let mut out = Vec::new();
    for k in ks {
        let blocks: Vec<(usize, usize)> = match kind {
            ProblemKind::Mc => {
                let t = require(rp.t, "T")?;
                if k == 0 || k >= j.min(t) {
                    return Err(format!("\"K\"={k} must satisfy 0 < K < min(J, T) = {}", j.min(t)));
                }
                vec![(j, k), (t, k)]
            }
            ProblemKind::Ppca => {
                if k == 0 || k >= j {
                    return Err(format!("\"K\"={k} must satisfy 0 < K < J={j}"));
                }
                vec![(j, k)]
            }
            _ => {
                if k == 0 || k > j {
                    return Err(format!("\"K\"={k} must satisfy 1 <= K <= J={j}"));
                }
                vec![(j, k)]
            }
        };
        let kinds = match &kinds_spec {
            None => ParamKind::ALL
                .into_iter()
                .filter(|pk| blocks.iter().all(|&(r, c)| pk.supports(r, c)))
                .collect(),
            Some(list) => {
                for pk in list {
                    if let Some(&(r, c)) = blocks.iter().find(|&&(r, c)| !pk.supports(r, c)) {
                        return Err(if *pk == ParamKind::Cayley && r == c {
                            format!(
                                "kinds: Cayley is excluded for square frames (J = K = {r}); the square case \
                                 is not implemented for this parameterization"
                            )
                        } else {
                            format!("kinds: {pk} cannot represent a {r}x{c} frame")
                        });
                    }
                }
                list.clone()
            }
        };

        let source = match &rp.data {
            Some(p) => DataSource::Files {
                path: resolve(base, p.clone()),
                covariates: rp
                    .covariates
                    .clone()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|c| resolve(base, c))
                    .collect(),
                missing_token: rp.missing_token.clone().unwrap_or_else(|| DEFAULT_MISSING_TOKEN.into()),
            },
            None => DataSource::Synthetic(synth_spec(&rp, kind, j, k, preset.as_ref(), with_mean, eta)?),
        };
        let t = match (kind, &source) {
            (ProblemKind::Mc, _) => rp.t,
            (ProblemKind::Ppca, DataSource::Synthetic(SynthSpec::Ppca { n, .. })) => Some(*n),
            (ProblemKind::Ppca, _) => rp.n,
            _ => None,
        };
        out.push(Problem {
            kind,
            j,
            k,
            t,
            source,
            kinds,
            ordered: rp.ordered.unwrap_or(true),
            with_mean,
            eta,
        });
    }
    Ok(out)
}

fn synth_spec(
    rp: &RawProblem,
    kind: ProblemKind,
    j: usize,
    k: usize,
    preset: Option<&SynthSpec>,
    with_mean: bool,
    eta: f64,
) -> Result<SynthSpec, String> {
    Ok(match kind {
        ProblemKind::Uniform => SynthSpec::Uniform { j, k },
        ProblemKind::Eigenmodel => {
            let SynthSpec::Eigenmodel { lambda, mu, .. } = SynthSpec::eigenmodel_default(j, k) else {
                unreachable!()
            };
            let lambda = rp.lambda.clone().unwrap_or(lambda);
            check_lambda(&lambda, k, false)?;
            SynthSpec::Eigenmodel {
                j,
                k,
                lambda,
                mu: rp.mu.unwrap_or(mu),
            }
        }
        ProblemKind::Ppca => {
            let (n, lambda, sigma) = match preset {
                Some(SynthSpec::Ppca { n, lambda, sigma, .. }) => {
                    if rp.lambda.is_some() || rp.sigma.is_some() || rp.n.is_some() {
                        return Err("\"preset\" fixes N, lambda and sigma; remove them".into());
                    }
                    (*n, lambda.clone(), *sigma)
                }
                _ => (
                    rp.n.unwrap_or(100),
                    rp.lambda.clone().unwrap_or_else(|| (0..k).map(|i| (k - i) as f64).collect()),
                    rp.sigma.unwrap_or(1.0),
                ),
            };
            check_lambda(&lambda, k, true)?;
            if n == 0 {
                return Err("\"N\" must be at least 1".into());
            }
            if !(sigma > 0.0) {
                return Err("\"sigma\" must be positive".into());
            }
            SynthSpec::Ppca {
                n,
                j,
                k,
                lambda,
                sigma,
                with_mean,
            }
        }
        ProblemKind::Mc => {
            let t = require(rp.t, "T")?;
            let SynthSpec::Mc {
                lambda,
                sigma,
                beta,
                missing_fraction,
                ..
            } = SynthSpec::mc_default(j, t, k)
            else {
                unreachable!()
            };
            let lambda = rp.lambda.clone().unwrap_or(lambda);
            check_lambda(&lambda, k, true)?;
            let sigma = rp.sigma.unwrap_or(sigma);
            if !(sigma > 0.0) {
                return Err("\"sigma\" must be positive".into());
            }
            let missing_fraction = rp.missing_fraction.unwrap_or(missing_fraction);
            if !(0.0..=0.5).contains(&missing_fraction) {
                return Err("\"missing_fraction\" must lie in [0, 0.5]".into());
            }
            SynthSpec::Mc {
                j,
                t,
                k,
                lambda,
                sigma,
                beta: rp.beta.clone().unwrap_or(beta),
                missing_fraction,
                eta,
            }
        }
    })
}

/// Markdown reference for the config format. Defaults are read from the
/// code, so the checked-in page (`docs/config-reference.md`) is regenerated
/// with `cargo run --example config_reference`.
pub fn config_reference() -> String {
    let s = SamplerConfig::default();
    let sampler = serde_json::to_value(&s).expect("sampler config serializes");
    let trajectory = sampler["trajectory"].as_str().unwrap_or_default().to_string();
    let mut out = String::new();
    out.push_str("# Benchmark config reference\n\n");
    out.push_str("<!-- Generated by `cargo run --example config_reference`; do not edit. -->\n\n");
    out.push_str(
        "A config is one JSON object. It holds either a `problems` list or the keys of a single \
         problem at the top level. Relative paths resolve against the config file's directory.\n\n",
    );
    out.push_str("## Global keys\n\n| key | default | meaning |\n|---|---|---|\n");
    let global = [
        ("problems", "(required)".to_string(), "list of problem objects"),
        ("kinds", "\"all\"".to_string(), "parameterizations for every problem: \"all\", a name, or a list"),
        ("runs", DEFAULT_RUNS.to_string(), "independent chains per problem and kind"),
        ("base_seed", "0".to_string(), "root of every per-run and per-dataset seed"),
        ("output", format!("\"{DEFAULT_OUTPUT}\""), "records CSV"),
        ("foi", "\"all\"".to_string(), "ESS columns: \"all\" (frames and auxiliaries), \"stiefel_only\", \"raw\""),
        ("regenerate_data", "false".to_string(), "draw a fresh synthetic dataset for every run"),
        ("givens_area_correction", "false".to_string(), "add log r per Givens coordinate pair"),
        ("sampler", "see below".to_string(), "NUTS settings"),
    ];
    for (k, d, m) in global {
        out.push_str(&format!("| `{k}` | {d} | {m} |\n"));
    }
    out.push_str("\n## `sampler`\n\n| key | default | meaning |\n|---|---|---|\n");
    let rows = [
        ("iters_total", s.iters_total.to_string(), "iterations including warmup"),
        ("iters_keep", s.iters_keep.to_string(), "kept draws; warmup is the difference"),
        ("target_accept", s.target_accept.to_string(), "dual-averaging target"),
        ("max_treedepth", s.max_treedepth.to_string(), "trajectory doublings per draw"),
        ("mass_adaptation", s.mass_adaptation.to_string(), "adapt a diagonal inverse metric in warmup windows"),
        ("trajectory", format!("\"{trajectory}\""), "\"multinomial\" or \"slice\" proposal selection"),
        ("initial_step", s.initial_step.to_string(), "first guess for the step-size search"),
        ("max_energy_error", s.max_energy_error.to_string(), "energy error that marks a divergence"),
        ("seed", "0".to_string(), "must stay 0 in configs; seeds come from `base_seed`"),
    ];
    for (k, d, m) in rows {
        out.push_str(&format!("| `{k}` | {d} | {m} |\n"));
    }
    out.push_str(
        "\n## Problem keys\n\n\
         | key | problems | default | meaning |\n|---|---|---|---|\n\
         | `problem` | all | (required) | `uniform`, `eigenmodel`, `ppca` or `mc` |\n\
         | `J` | all | (required; fixed by `preset`) | frame rows, nodes, or panel rows |\n\
         | `K` | all | (required) | frame columns; a list expands into one problem per value |\n\
         | `T` | mc | (required) | panel columns |\n\
         | `N` | ppca | 100 | observations |\n\
         | `preset` | ppca | none | `synthetic1` (N=150, J=5, K=2, λ=(9,1), σ=0.01) or `synthetic2` (N=100, J=50, K=3, λ=(5,3,1.5), σ=1) |\n\
         | `kinds` | all | global `kinds` | per-problem override |\n\
         | `data` | eigenmodel, ppca, mc | synthetic | CSV data file instead of synthetic data |\n\
         | `covariates` | mc | [] | CSV files, one `J × T` matrix each |\n\
         | `missing_token` | with `data` | \"NA\" | marks missing cells |\n\
         | `lambda` | eigenmodel, ppca, mc | eigenmodel J(1 − k/(2K)); ppca K, K−1, …, 1; mc 2√(JT)(K−k)/K | generating scales |\n\
         | `mu` | eigenmodel | −0.5 | generating intercept |\n\
         | `sigma` | ppca, mc | 1 | generating noise sd |\n\
         | `beta` | mc | [1] | generating covariate effects, one covariate per entry |\n\
         | `missing_fraction` | mc | 0.1 | share of masked cells |\n\
         | `eta` | mc | 1 | rate of the exponential prior on λ |\n\
         | `with_mean` | ppca | false | model a mean vector |\n\
         | `ordered` | ppca | true | keep λ descending |\n",
    );
    out.push_str(
        "\nCayley needs K < J; with `kinds` left at \"all\" it is skipped for square frames, and naming it \
         explicitly for a square frame is an error.\n",
    );
    out
}
