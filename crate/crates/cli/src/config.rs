//! Run configuration: command-line flags layered over a flat `key = value`
//! file, layered over an optional named preset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ptring::dynamics::DEFAULT_DT;
use ptring::phase::{DEFAULT_BISECTION_TOL, DEFAULT_TOL_IM};
use ptring::{DynamicsOptions, LatticeSpec, ThresholdOptions};
use serde::Serialize;

use crate::presets;

/// Environment variable supplying the default worker count.
pub const JOBS_ENV: &str = "PT_RING_JOBS";

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_T_MAX: f64 = 20.0;
pub const DEFAULT_SAMPLE_DT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalues of the lattice Hamiltonian.
    Spectrum,
    /// Level-by-level energy shift between ring and open chain at gamma = 0.
    RingChainDiff,
    /// PT-breaking threshold for the given impurity site(s).
    Threshold,
    /// Threshold as a function of impurity position, one curve per lambda.
    PhaseDiagram,
    /// Steady-state momentum across the threshold.
    Chirality,
    /// Site-resolved evolution of a single packet.
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Spectra, PT thresholds and ring chirality for non-uniform PT-symmetric lattices.
#[derive(Debug, Parser)]
#[command(name = "ptring", version, about)]
pub struct Cli {
    /// Computation to run; may instead come from `--preset` or `--config`.
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// Flat `key = value` configuration file (or a manifest.json to replay).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Named figure preset (see `--list-presets`).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Print the available presets and exit.
    #[arg(long)]
    pub list_presets: bool,

    /// Number of sites N.
    #[arg(long = "n", value_name = "N")]
    pub n_sites: Option<String>,
    /// Tunneling exponent alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Comma-separated list of alpha values (overrides --alpha).
    #[arg(long, allow_hyphen_values = true)]
    pub alphas: Option<String>,
    /// Tunneling scale t0.
    #[arg(long)]
    pub t0: Option<String>,
    /// Gain impurity site m (1 <= m <= N/2).
    #[arg(long = "m")]
    pub gain_site: Option<String>,
    /// Comma-separated impurity sites.
    #[arg(long = "ms")]
    pub m_values: Option<String>,
    /// Impurity strength gamma.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Comma-separated gamma grid for chirality runs.
    #[arg(long = "gammas")]
    pub gamma_grid: Option<String>,
    /// Ring-link scale lambda in [0, 1].
    #[arg(long = "lambda")]
    pub lambda_ring: Option<String>,
    /// Comma-separated lambda values.
    #[arg(long = "lambdas")]
    pub lambda_values: Option<String>,
    /// Comma-separated initial packet sites.
    #[arg(long = "m0")]
    pub m0_values: Option<String>,

    /// Output directory.
    #[arg(long)]
    pub output_dir: Option<String>,
    /// Output format.
    #[arg(long = "format", value_name = "csv|json")]
    pub output_format: Option<String>,
    /// Worker threads [env: PT_RING_JOBS].
    #[arg(long = "jobs")]
    pub parallelism: Option<String>,

    /// Reality tolerance relative to the largest matrix entry.
    #[arg(long)]
    pub tol_im: Option<String>,
    /// Bisection stopping width in units of the quarter bandwidth.
    #[arg(long)]
    pub bisection_tol: Option<String>,
    /// Quadrature step in time units.
    #[arg(long)]
    pub dt: Option<String>,
    /// Initial averaging window in time units (default 100 N).
    #[arg(long)]
    pub window: Option<String>,
    /// Trajectory length in time units.
    #[arg(long)]
    pub t_max: Option<String>,
    /// Trajectory sampling interval in time units.
    #[arg(long)]
    pub sample_dt: Option<String>,
}

/// Every key accepted in a configuration file, paired with its flag.
pub const KEYS: [(&str, &str); 21] = [
    ("command", "<command>"),
    ("n_sites", "--n"),
    ("alpha", "--alpha"),
    ("alpha_values", "--alphas"),
    ("t0", "--t0"),
    ("gain_site", "--m"),
    ("m_values", "--ms"),
    ("gamma", "--gamma"),
    ("gamma_grid", "--gammas"),
    ("lambda_ring", "--lambda"),
    ("lambda_values", "--lambdas"),
    ("m0_values", "--m0"),
    ("output_dir", "--output-dir"),
    ("output_format", "--format"),
    ("parallelism", "--jobs"),
    ("tol_im", "--tol-im"),
    ("bisection_tol", "--bisection-tol"),
    ("dt", "--dt"),
    ("window", "--window"),
    ("t_max", "--t-max"),
    ("sample_dt", "--sample-dt"),
];

fn flag_for(key: &str) -> &'static str {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, f)| *f)
        .unwrap_or("")
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UsageError {
    #[error("invalid value for `{key}` ({flag}): {reason}")]
    Invalid {
        key: String,
        flag: &'static str,
        reason: String,
    },
    #[error("missing required key `{key}` ({flag})")]
    Missing { key: String, flag: &'static str },
    #[error("unknown key `{key}` in {source_name}")]
    UnknownKey { key: String, source_name: String },
    #[error("{source_name}:{line}: expected `key = value`")]
    Syntax { source_name: String, line: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
}

impl UsageError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        UsageError::Invalid {
            key: key.to_string(),
            flag: flag_for(key),
            reason: reason.into(),
        }
    }

    /// Offending key, when the error concerns one.
    #[cfg(test)]
    pub fn key(&self) -> Option<&str> {
        match self {
            UsageError::Invalid { key, .. }
            | UsageError::Missing { key, .. }
            | UsageError::UnknownKey { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Parses the flat format: one `key = value` per line, `#` starts a comment.
pub fn parse_kv(text: &str, source_name: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(UsageError::Syntax {
            source_name: source_name.to_string(),
            line: i + 1,
        })?;
        let k = k.trim();
        if !KEYS.iter().any(|(key, _)| *key == k) {
            return Err(UsageError::UnknownKey {
                key: k.to_string(),
                source_name: source_name.to_string(),
            });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Reads a config file; `.json` files are taken to be run manifests whose
/// `inputs` object is replayed.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| UsageError::Read {
        path: name.clone(),
        reason: e.to_string(),
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| UsageError::Read {
            path: name.clone(),
            reason: e.to_string(),
        })?;
        let inputs = v
            .get("inputs")
            .and_then(|i| i.as_object())
            .ok_or(UsageError::Read {
                path: name.clone(),
                reason: "no `inputs` object".into(),
            })?;
        let mut out = BTreeMap::new();
        for (k, val) in inputs {
            if !KEYS.iter().any(|(key, _)| key == k) {
                return Err(UsageError::UnknownKey {
                    key: k.clone(),
                    source_name: name,
                });
            }
            let s = match val {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.insert(k.clone(), s);
        }
        return Ok(out);
    }
    parse_kv(&text, &name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numerics {
    pub tol_im: f64,
    pub bisection_tol: f64,
    pub dt: f64,
    pub window: Option<f64>,
    pub t_max: f64,
    pub sample_dt: f64,
}

impl Numerics {
    pub fn threshold(&self) -> ThresholdOptions {
        ThresholdOptions {
            tol_im: self.tol_im,
            tol: self.bisection_tol,
            ..ThresholdOptions::default()
        }
    }

    pub fn dynamics(&self) -> DynamicsOptions {
        DynamicsOptions {
            dt: self.dt,
            window: self.window,
            ..DynamicsOptions::default()
        }
    }
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Base lattice; sweeps vary alpha, lambda, m and gamma around it.
    pub lattice: LatticeSpec,
    pub alpha_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub m_values: Option<Vec<usize>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub m0_values: Vec<usize>,
    pub output_dir: PathBuf,
    pub output_format: Format,
    pub parallelism: usize,
    pub numerics: Numerics,
    /// Effective inputs (after layering and defaults), echoed to the manifest.
    pub inputs: BTreeMap<String, String>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, UsageError> {
    let x: f64 = v
        .parse()
        .map_err(|_| UsageError::invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(UsageError::invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, UsageError> {
    v.parse()
        .map_err(|_| UsageError::invalid(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_list<T>(
    key: &str,
    v: &str,
    item: impl Fn(&str, &str) -> Result<T, UsageError>,
) -> Result<Vec<T>, UsageError> {
    let out: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(UsageError::invalid(key, "empty list"));
    }
    Ok(out)
}

fn positive(key: &str, x: f64) -> Result<f64, UsageError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(UsageError::invalid(key, "must be positive"))
    }
}

fn fmt_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn spec_error(e: ptring::Error) -> UsageError {
    match e {
        ptring::Error::Domain { key, reason } => UsageError::invalid(key, reason),
        other => UsageError::invalid("n_sites", other.to_string()),
    }
}

impl Cli {
    fn flag_values(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("n_sites", &self.n_sites),
            ("alpha", &self.alpha),
            ("alpha_values", &self.alphas),
            ("t0", &self.t0),
            ("gain_site", &self.gain_site),
            ("m_values", &self.m_values),
            ("gamma", &self.gamma),
            ("gamma_grid", &self.gamma_grid),
            ("lambda_ring", &self.lambda_ring),
            ("lambda_values", &self.lambda_values),
            ("m0_values", &self.m0_values),
            ("output_dir", &self.output_dir),
            ("output_format", &self.output_format),
            ("parallelism", &self.parallelism),
            ("tol_im", &self.tol_im),
            ("bisection_tol", &self.bisection_tol),
            ("dt", &self.dt),
            ("window", &self.window),
            ("t_max", &self.t_max),
            ("sample_dt", &self.sample_dt),
        ];
        let mut out: BTreeMap<String, String> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if let Some(c) = self.command {
            out.insert("command".into(), command_name(c).into());
        }
        out
    }

    /// Layers preset, file, environment and flags into a validated config.
    pub fn resolve(&self) -> Result<RunConfig, UsageError> {
        let mut merged = BTreeMap::new();
        if let Some(name) = &self.preset {
            let text = presets::get(name).ok_or_else(|| UsageError::UnknownPreset(name.clone()))?;
            merged.extend(parse_kv(text, &format!("preset {name}"))?);
        }
        if let Some(path) = &self.config {
            merged.extend(read_config_file(path)?);
        }
        if !merged.contains_key("parallelism") {
            if let Ok(v) = std::env::var(JOBS_ENV) {
                merged.insert("parallelism".into(), v);
            }
        }
        merged.extend(self.flag_values());
        RunConfig::from_map(&merged)
    }
}

pub fn command_name(c: Command) -> &'static str {
    match c {
        Command::Spectrum => "spectrum",
        Command::RingChainDiff => "ring-chain-diff",
        Command::Threshold => "threshold",
        Command::PhaseDiagram => "phase-diagram",
        Command::Chirality => "chirality",
        Command::Trajectory => "trajectory",
    }
}

impl RunConfig {
    /// Validates a merged key-value map. Nothing is computed before every
    /// key has been checked.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<RunConfig, UsageError> {
        if let Some(k) = map.keys().find(|k| !KEYS.iter().any(|(key, _)| key == k)) {
            return Err(UsageError::UnknownKey {
                key: k.clone(),
                source_name: "configuration".into(),
            });
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let missing = |k: &str| UsageError::Missing {
            key: k.to_string(),
            flag: flag_for(k),
        };

        let command = match get("command") {
            Some(v) => Command::from_str(v, true)
                .map_err(|_| UsageError::invalid("command", format!("unknown command `{v}`")))?,
            None => return Err(missing("command")),
        };

        let n_sites = parse_usize("n_sites", get("n_sites").ok_or_else(|| missing("n_sites"))?)?;
        let alpha_values = match (get("alpha_values"), get("alpha")) {
            (Some(v), _) => parse_list("alpha_values", v, parse_f64)?,
            (None, Some(v)) => vec![parse_f64("alpha", v)?],
            (None, None) => return Err(missing("alpha")),
        };
        let alpha = alpha_values[0];

        let mut spec_pairs: Vec<(&str, String)> = vec![
            ("n_sites", n_sites.to_string()),
            ("alpha", alpha.to_string()),
        ];
        for k in ["t0", "gain_site", "gamma", "lambda_ring"] {
            if let Some(v) = get(k) {
                spec_pairs.push((k, v.to_string()));
            }
        }
        let lattice = LatticeSpec::from_kv(spec_pairs.iter().map(|(k, v)| (*k, v.as_str())))
            .map_err(spec_error)?;

        let lambda_values = match get("lambda_values") {
            Some(v) => parse_list("lambda_values", v, parse_f64)?,
            None => vec![lattice.lambda_ring()],
        };
        let m_values = get("m_values")
            .map(|v| parse_list("m_values", v, parse_usize))
            .transpose()?;
        let gamma_grid = get("gamma_grid")
            .map(|v| parse_list("gamma_grid", v, parse_f64))
            .transpose()?;
        let m0_values = match get("m0_values") {
            Some(v) => parse_list("m0_values", v, parse_usize)?,
            None => vec![1],
        };

        // Every swept combination must itself be a valid lattice.
        for &a in &alpha_values {
            for &l in &lambda_values {
                let probe = LatticeSpec::builder(n_sites, a)
                    .t0(lattice.t0())
                    .gain_site(lattice.gain_site())
                    .gamma(lattice.gamma())
                    .lambda_ring(l);
                probe.build().map_err(|e| match e {
                    ptring::Error::Domain {
                        key: "lambda_ring",
                        reason,
                    } if get("lambda_values").is_some() => {
                        UsageError::invalid("lambda_values", reason)
                    }
                    ptring::Error::Domain {
                        key: "alpha",
                        reason,
                    } if get("alpha_values").is_some() => {
                        UsageError::invalid("alpha_values", reason)
                    }
                    other => spec_error(other),
                })?;
            }
        }
        if let Some(ms) = &m_values {
            if let Some(&m) = ms.iter().find(|&&m| m == 0 || m > n_sites / 2) {
                return Err(UsageError::invalid(
                    "m_values",
                    format!("site {m} outside 1..={}", n_sites / 2),
                ));
            }
        }
        if let Some(&m0) = m0_values.iter().find(|&&m0| m0 == 0 || m0 > n_sites) {
            return Err(UsageError::invalid(
                "m0_values",
                format!("site {m0} outside 1..={n_sites}"),
            ));
        }
        if let Some(g) = &gamma_grid {
            if g.iter().any(|&x| x < 0.0) {
                return Err(UsageError::invalid(
                    "gamma_grid",
                    "gamma must be non-negative",
                ));
            }
        }

        let output_dir = PathBuf::from(get("output_dir").unwrap_or(DEFAULT_OUTPUT_DIR));
        let output_format = match get("output_format") {
            Some(v) => Format::from_str(v, true).map_err(|_| {
                UsageError::invalid("output_format", format!("`{v}` is not csv or json"))
            })?,
            None => Format::Csv,
        };
        let parallelism = match get("parallelism") {
            Some(v) => {
                let k = parse_usize("parallelism", v)?;
                if k == 0 {
                    return Err(UsageError::invalid("parallelism", "must be at least 1"));
                }
                k
            }
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };

        let num = |k: &str, default: f64| -> Result<f64, UsageError> {
            match get(k) {
                Some(v) => positive(k, parse_f64(k, v)?),
                None => Ok(default),
            }
        };
        let numerics = Numerics {
            tol_im: num("tol_im", DEFAULT_TOL_IM)?,
            bisection_tol: num("bisection_tol", DEFAULT_BISECTION_TOL)?,
            dt: num("dt", DEFAULT_DT)?,
            window: get("window")
                .map(|v| positive("window", parse_f64("window", v)?))
                .transpose()?,
            t_max: match get("t_max") {
                Some(v) => {
                    let t = parse_f64("t_max", v)?;
                    if t < 0.0 {
                        return Err(UsageError::invalid("t_max", "must be non-negative"));
                    }
                    t
                }
                None => DEFAULT_T_MAX,
            },
            sample_dt: num("sample_dt", DEFAULT_SAMPLE_DT)?,
        };

        let mut inputs = BTreeMap::new();
        inputs.insert("command".into(), command_name(command).to_string());
        for (k, v) in lattice.to_kv() {
            inputs.insert(k.to_string(), v);
        }
        inputs.insert("alpha_values".into(), fmt_list(&alpha_values));
        inputs.insert("lambda_values".into(), fmt_list(&lambda_values));
        if let Some(ms) = &m_values {
            inputs.insert("m_values".into(), fmt_list(ms));
        }
        if let Some(g) = &gamma_grid {
            inputs.insert("gamma_grid".into(), fmt_list(g));
        }
        inputs.insert("m0_values".into(), fmt_list(&m0_values));
        inputs.insert("output_dir".into(), output_dir.display().to_string());
        inputs.insert("output_format".into(), output_format.extension().into());
        inputs.insert("parallelism".into(), parallelism.to_string());
        inputs.insert("tol_im".into(), numerics.tol_im.to_string());
        inputs.insert("bisection_tol".into(), numerics.bisection_tol.to_string());
        inputs.insert("dt".into(), numerics.dt.to_string());
        if let Some(w) = numerics.window {
            inputs.insert("window".into(), w.to_string());
        }
        inputs.insert("t_max".into(), numerics.t_max.to_string());
        inputs.insert("sample_dt".into(), numerics.sample_dt.to_string());

        Ok(RunConfig {
            command,
            lattice,
            alpha_values,
            lambda_values,
            m_values,
            gamma_grid,
            m0_values,
            output_dir,
            output_format,
            parallelism,
            numerics,
            inputs,
        })
    }

    /// The base lattice with `alpha`, `lambda` and `m` replaced.
    pub fn lattice_for(&self, alpha: f64, lambda: f64, m: usize) -> ptring::Result<LatticeSpec> {
        LatticeSpec::builder(self.lattice.n_sites(), alpha)
            .t0(self.lattice.t0())
            .gain_site(m)
            .gamma(self.lattice.gamma())
            .lambda_ring(lambda)
            .build()
    }
}
