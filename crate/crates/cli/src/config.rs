//! Run configuration: TOML file, then `FRACLOG_*` environment variables, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fraclog_core::verify::SuiteConfig;
use fraclog_core::{
    validate_params, DomainSpec, EigenOptions, Initial, MountainPassOptions, ProblemParams, RawParams, SolveOptions,
    ThresholdOptions,
};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "FRACLOG_";

/// `(key, meaning)` for every accepted key, in emission order.
pub const KEYS: &[(&str, &str)] = &[
    ("dim", "spatial dimension, 1 or 2"),
    ("domain", "[a, b] for an interval or [x0, x1, y0, y1] for a rectangle"),
    ("n", "cells per axis"),
    ("s", "fractional order in (0, 1)"),
    ("p", "diffusion exponent, at least 2"),
    ("q", "principal reaction exponent"),
    ("r", "absorption exponent, q < r < p_star"),
    ("lambda", "reaction parameter for solve and mountain-pass"),
    ("seed", "seed for every random start"),
    ("threads", "worker threads, 0 for all cores"),
    ("cache_dir", "directory for cached weights, empty to disable"),
    ("residual_tol", "projected residual tolerance"),
    ("max_iters", "descent iteration cap"),
    ("collapse_tol", "sup-norm below which a solution counts as zero"),
    ("initial", "reaction_root | zero | random | eigen:<tau> | constant:<c>"),
    ("eigen_tol", "eigen residual tolerance, 0 for the default"),
    ("eigen_restarts", "independent eigen restarts"),
    ("eigen_max_iters", "eigen iteration cap"),
    ("bracket_tol", "relative threshold bracket width"),
    ("lambda_high", "continuation start, 0 for ten times the lower bound"),
    ("step_factor", "continuation factor in (0, 1)"),
    ("max_solves", "solve budget for threshold detection"),
    ("mp_nodes", "mountain-pass path nodes"),
    ("mp_tol", "mountain-pass final residual"),
    ("distinct_tol", "minimal sup-norm gap between the two solutions"),
    ("string_iters", "climbing-string iteration cap"),
    ("string_tol", "climbing-node residual handed to the polish"),
    ("polish_iters", "saddle polish iteration cap"),
    ("from", "first sweep lambda"),
    ("to", "last sweep lambda"),
    ("steps", "number of sweep points"),
    ("warm", "warm-start each sweep point from the previous one"),
    ("regime", "verify group: sub | equi | super | torsion | structure | refine | all"),
    ("hopf_frac", "boundary Hopf ratio relative to the median"),
    ("trials", "random starts per uniqueness or collapse probe"),
    ("unique_tol", "sup-norm spread allowed among random-start solutions"),
    ("torsion_tol", "sup-norm spread allowed between torsion starts"),
    ("limit_tol", "final distance for branches tending to zero"),
    ("fold_factor", "super branch tolerance in units of sqrt(bracket_tol) sup u_star"),
    ("structure_samples", "random pairs for the operator inequalities"),
    ("scalar_samples", "random triples for the scalar inequality"),
    ("homogeneity_tol", "relative tolerance of the domain-scaling check"),
    ("sub", "[p, q, r] for the subdiffusive checks"),
    ("equi", "[p, q, r] for the equidiffusive checks"),
    ("super", "[p, q, r] for the superdiffusive checks"),
    ("refine_ns", "ascending grid sizes for refine"),
    ("refine_lambda", "fixed lambda whose solution is tracked by refine, 0 for none"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: i64,
    pub domain: Vec<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    pub cache_dir: String,
    pub residual_tol: f64,
    pub max_iters: usize,
    pub collapse_tol: f64,
    pub initial: String,
    pub eigen_tol: f64,
    pub eigen_restarts: usize,
    pub eigen_max_iters: usize,
    pub bracket_tol: f64,
    pub lambda_high: f64,
    pub step_factor: f64,
    pub max_solves: usize,
    pub mp_nodes: usize,
    pub mp_tol: f64,
    pub distinct_tol: f64,
    pub string_iters: usize,
    pub string_tol: f64,
    pub polish_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    pub steps: usize,
    pub warm: bool,
    pub regime: String,
    pub hopf_frac: f64,
    pub trials: usize,
    pub unique_tol: f64,
    pub torsion_tol: f64,
    pub limit_tol: f64,
    pub fold_factor: f64,
    pub structure_samples: usize,
    pub scalar_samples: usize,
    pub homogeneity_tol: f64,
    pub sub: [f64; 3],
    pub equi: [f64; 3],
    #[serde(rename = "super")]
    pub sup: [f64; 3],
    pub refine_ns: Vec<usize>,
    pub refine_lambda: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solve = SolveOptions::default();
        let eigen = EigenOptions::default();
        let th = ThresholdOptions::default();
        let mp = MountainPassOptions::default();
        let suite = SuiteConfig::default();
        RunConfig {
            dim: 1,
            domain: Vec::new(),
            n: 64,
            s: None,
            p: None,
            q: None,
            r: None,
            lambda: None,
            seed: 0,
            threads: 0,
            cache_dir: String::new(),
            residual_tol: solve.residual_tol,
            max_iters: solve.max_iters,
            collapse_tol: solve.collapse_tol,
            initial: "reaction_root".into(),
            eigen_tol: 0.0,
            eigen_restarts: eigen.restarts,
            eigen_max_iters: eigen.max_iters,
            bracket_tol: th.bracket_tol,
            lambda_high: 0.0,
            step_factor: th.step_factor,
            max_solves: th.max_solves,
            mp_nodes: mp.nodes,
            mp_tol: mp.tol,
            distinct_tol: mp.distinct_tol,
            string_iters: mp.string_iters,
            string_tol: mp.string_tol,
            polish_iters: mp.polish_iters,
            from: None,
            to: None,
            steps: 10,
            warm: false,
            regime: "all".into(),
            hopf_frac: suite.hopf_frac,
            trials: suite.trials,
            unique_tol: suite.unique_tol,
            torsion_tol: suite.torsion_tol,
            limit_tol: suite.limit_tol,
            fold_factor: suite.fold_factor,
            structure_samples: suite.structure_samples,
            scalar_samples: suite.scalar_samples,
            homogeneity_tol: suite.homogeneity_tol,
            sub: suite.sub,
            equi: suite.equi,
            sup: suite.sup,
            refine_ns: suite.refine_ns,
            refine_lambda: 0.0,
        }
    }
}

/// Where a value came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Env(String),
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Env(var) => write!(f, "environment variable {var}"),
            Origin::Flag(flag) => write!(f, "flag {flag}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("unknown key {key:?} ({origin})")]
    UnknownKey { key: String, origin: Origin },
    #[error("key {key:?} ({origin}): {message}")]
    Type { key: String, origin: Origin, message: String },
    #[error("missing required key {key:?}")]
    Missing { key: String },
    #[error("invalid value for {key:?} ({origin}): {message}")]
    Invalid { key: String, origin: Origin, message: String },
}

/// Effective configuration plus the origin of every non-default key.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded {
    pub config: RunConfig,
    pub origins: BTreeMap<String, Origin>,
}

impl Loaded {
    pub fn origin(&self, key: &str) -> Origin {
        self.origins.get(key).cloned().unwrap_or(Origin::Default)
    }
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Line of the first `key =` assignment in a TOML text.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

/// Reads a single override value: TOML syntax when it parses, a bare string otherwise.
fn override_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn env_key(var: &str) -> Option<String> {
    var.strip_prefix(ENV_PREFIX).map(|k| k.to_ascii_lowercase())
}

/// Merges `file`, then environment pairs, then flag pairs.
pub fn load(
    file: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
    flags: &[(String, String, String)],
) -> Result<Loaded, ConfigError> {
    let mut table = toml::Table::new();
    let mut origins = BTreeMap::new();
    if let Some(path) = file {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
        // typed parse first so errors carry line numbers
        toml::from_str::<RunConfig>(&text).map_err(|e| ConfigError::File {
            path: shown.clone(),
            message: e.to_string().trim_end().to_string(),
        })?;
        table = toml::from_str(&text).map_err(|e| ConfigError::File { path: shown.clone(), message: e.to_string() })?;
        for key in table.keys() {
            origins.insert(key.clone(), Origin::File { path: shown.clone(), line: line_of(&text, key) });
        }
    }
    let mut env: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    env.sort();
    let overrides = env
        .into_iter()
        .map(|(var, value)| (env_key(&var).unwrap_or_default(), value, Origin::Env(var)))
        .chain(flags.iter().map(|(k, v, flag)| (k.clone(), v.clone(), Origin::Flag(flag.clone()))));
    for (key, raw, origin) in overrides {
        if !known(&key) {
            return Err(ConfigError::UnknownKey { key, origin });
        }
        let value = override_value(&raw);
        let mut single = toml::Table::new();
        single.insert(key.clone(), value.clone());
        RunConfig::deserialize(toml::Value::Table(single)).map_err(|e| ConfigError::Type {
            key: key.clone(),
            origin: origin.clone(),
            message: e.to_string().trim_end().replace('\n', " "),
        })?;
        table.insert(key.clone(), value);
        origins.insert(key, origin);
    }
    let config = RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::File {
        path: "merged configuration".into(),
        message: e.to_string(),
    })?;
    Ok(Loaded { config, origins })
}

/// Canonical TOML text; parsing it back yields the same configuration.
pub fn emit(config: &RunConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}

/// Parses the `initial` key.
pub fn parse_initial(text: &str) -> Result<Initial, String> {
    let number = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    match text.split_once(':') {
        None => match text {
            "reaction_root" => Ok(Initial::ReactionRoot),
            "zero" => Ok(Initial::Zero),
            "random" => Ok(Initial::RandomPositive),
            other => Err(format!("unknown start {other:?}")),
        },
        Some(("eigen", tau)) => Ok(Initial::ScaledEigen(number(tau)?)),
        Some(("constant", c)) => Ok(Initial::Constant(number(c)?)),
        Some((other, _)) => Err(format!("unknown start {other:?}")),
    }
}

impl Loaded {
    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.into(), origin: self.origin(key), message: message.into() }
    }

    fn required(&self, key: &str, v: Option<f64>) -> Result<f64, ConfigError> {
        v.ok_or_else(|| ConfigError::Missing { key: key.into() })
    }

    pub fn domain(&self) -> Result<DomainSpec, ConfigError> {
        let c = &self.config;
        let d = &c.domain;
        let domain = match (c.dim, d.len()) {
            (1, 0) => DomainSpec::Interval { a: 0.0, b: 1.0 },
            (2, 0) => DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 },
            (1, 2) => DomainSpec::Interval { a: d[0], b: d[1] },
            (2, 4) => DomainSpec::Rectangle { x0: d[0], x1: d[1], y0: d[2], y1: d[3] },
            (1 | 2, k) => return Err(self.invalid("domain", format!("{k} bounds do not fit dim = {}", c.dim))),
            (other, _) => return Err(self.invalid("dim", format!("must be 1 or 2, got {other}"))),
        };
        domain.validate().map_err(|e| self.invalid("domain", e.to_string()))?;
        Ok(domain)
    }

    pub fn params(&self) -> Result<ProblemParams, ConfigError> {
        let c = &self.config;
        let raw = RawParams {
            dim: c.dim,
            s: self.required("s", c.s)?,
            p: self.required("p", c.p)?,
            q: self.required("q", c.q)?,
            r: self.required("r", c.r)?,
        };
        validate_params(raw).map_err(|e| {
            let key = self.offending_key(raw);
            let mut message = e.to_string();
            for k in ["s", "p", "q", "r"] {
                message.push_str(&format!("; {k} from {}", self.origin(k)));
            }
            self.invalid(key, message)
        })
    }

    /// Key most likely at fault for a rejected parameter set.
    fn offending_key(&self, raw: RawParams) -> &'static str {
        let later = |a: &'static str, b: &'static str| {
            let rank = |k| match self.origin(k) {
                Origin::Flag(_) => 3,
                Origin::Env(_) => 2,
                Origin::File { .. } => 1,
                Origin::Default => 0,
            };
            if rank(b) >= rank(a) {
                b
            } else {
                a
            }
        };
        let RawParams { dim, s, p, q, r } = raw;
        if dim != 1 && dim != 2 {
            "dim"
        } else if !(s > 0.0 && s < 1.0) {
            "s"
        } else if !(p >= 2.0) {
            "p"
        } else if p * s >= dim as f64 {
            later("p", "s")
        } else if !(q > 1.0) {
            "q"
        } else if !(q < r) {
            later("q", "r")
        } else {
            "r"
        }
    }

    pub fn lambda(&self) -> Result<f64, ConfigError> {
        let l = self.required("lambda", self.config.lambda)?;
        if l > 0.0 && l.is_finite() {
            Ok(l)
        } else {
            Err(self.invalid("lambda", format!("must be positive, got {l}")))
        }
    }

    pub fn solve_options(&self) -> Result<SolveOptions, ConfigError> {
        let c = &self.config;
        let initial = parse_initial(&c.initial).map_err(|m| self.invalid("initial", m))?;
        let o = SolveOptions {
            residual_tol: c.residual_tol,
            max_iters: c.max_iters,
            seed: c.seed,
            initial,
            collapse_tol: c.collapse_tol,
            ..SolveOptions::default()
        };
        o.validate().map_err(|e| self.invalid("residual_tol", e.to_string()))?;
        Ok(o)
    }

    pub fn eigen_options(&self) -> EigenOptions {
        let c = &self.config;
        EigenOptions {
            tol: (c.eigen_tol > 0.0).then_some(c.eigen_tol),
            max_iters: c.eigen_max_iters,
            restarts: c.eigen_restarts,
            seed: c.seed,
            ..EigenOptions::default()
        }
    }

    pub fn threshold_options(&self) -> ThresholdOptions {
        let c = &self.config;
        ThresholdOptions {
            lambda_high: (c.lambda_high > 0.0).then_some(c.lambda_high),
            bracket_tol: c.bracket_tol,
            step_factor: c.step_factor,
            max_solves: c.max_solves,
            eigen: self.eigen_options(),
        }
    }

    pub fn mountain_options(&self) -> MountainPassOptions {
        let c = &self.config;
        MountainPassOptions {
            nodes: c.mp_nodes,
            string_iters: c.string_iters,
            string_tol: c.string_tol,
            polish_iters: c.polish_iters,
            tol: c.mp_tol,
            distinct_tol: c.distinct_tol,
            ..MountainPassOptions::default()
        }
    }

    pub fn sweep_lambdas(&self) -> Result<Vec<f64>, ConfigError> {
        let c = &self.config;
        let from = self.required("from", c.from)?;
        let to = self.required("to", c.to)?;
        if c.steps == 0 {
            return Err(self.invalid("steps", "need at least one point"));
        }
        if !(from > 0.0 && to > 0.0) {
            return Err(self.invalid("from", "sweep bounds must be positive"));
        }
        if c.steps == 1 {
            return Ok(vec![from]);
        }
        let k = (c.steps - 1) as f64;
        Ok((0..c.steps).map(|i| from + (to - from) * (i as f64 / k)).collect())
    }

    pub fn suite_config(&self) -> Result<SuiteConfig, ConfigError> {
        let c = &self.config;
        Ok(SuiteConfig {
            domain: self.domain()?,
            n: c.n,
            s: c.s.unwrap_or(SuiteConfig::default().s),
            sub: c.sub,
            equi: c.equi,
            sup: c.sup,
            seed: c.seed,
            trials: c.trials,
            hopf_frac: c.hopf_frac,
            unique_tol: c.unique_tol,
            torsion_tol: c.torsion_tol,
            limit_tol: c.limit_tol,
            fold_factor: c.fold_factor,
            structure_samples: c.structure_samples,
            scalar_samples: c.scalar_samples,
            refine_ns: c.refine_ns.clone(),
            homogeneity_tol: c.homogeneity_tol,
            solve: self.solve_options()?,
            eigen: self.eigen_options(),
            threshold: self.threshold_options(),
            mountain: self.mountain_options(),
        })
    }
}
