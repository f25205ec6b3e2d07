//! Line-oriented configuration: `key = value` pairs grouped under
//! `[section]` headers, `#` starts a comment.
//!
//! ```text
//! scenario = flat_sawtooth
//!
//! [profile]
//! kind = sawtooth
//! alpha = 1
//!
//! [nonlinearity]
//! f = 1        # coefficients c0 c1 ... of c0 + c1 u + ...
//! g = 0 1
//! ```
//!
//! Every key left out takes its default, which for the profile, the
//! nonlinearity, the ladder and the mesh comes from the named scenario.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use osclab::geometry::{Modulation, OscillationProfile, ProfileShape};
use osclab::nonlinearity::{Nonlinearity, Reaction};
use osclab::scenario::{Ladder, MeshPolicy, Scenario, SHIPPED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    /// One-based line the error refers to; `None` for whole-document errors.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    Sawtooth,
    Sine,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Constant => "constant",
            ProfileKind::Sawtooth => "sawtooth",
            ProfileKind::Sine => "sine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    pub period: f64,
    pub alpha: f64,
    /// Height `c` for `constant`, slope for `sawtooth`, sine amplitude for `sine`.
    pub amplitude: f64,
    pub offset: f64,
    /// Amplitude modulation `phi(x') = modulation + modulation_slope * x'`.
    pub modulation: f64,
    pub modulation_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityConfig {
    /// Polynomial coefficients of `f(u)` in ascending powers.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub nonlinear: f64,
    pub linear: f64,
    pub eigen: f64,
    pub estimator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub scenario: String,
    pub profile: ProfileConfig,
    pub nonlinearity: NonlinearityConfig,
    pub eps0: f64,
    pub levels: usize,
    pub h0: f64,
    pub h_interior: f64,
    pub tolerances: Tolerances,
    pub eigen_count: usize,
    /// Run the h-refinement control at the smallest `eps`.
    pub control: bool,
    pub out: PathBuf,
    pub seed: u64,
}

const DEFAULT_SEED: u64 = 24301;

impl Configuration {
    /// Defaults for a shipped scenario.
    pub fn for_scenario(name: &str) -> Result<Self, ConfigError> {
        let sc = Scenario::<f64>::shipped(name).map_err(|e| ConfigError {
            line: None,
            message: e.to_string(),
        })?;
        let p = &sc.profile;
        let kind = match p.shape {
            ProfileShape::Constant => ProfileKind::Constant,
            ProfileShape::Sawtooth => ProfileKind::Sawtooth,
            ProfileShape::Sine => ProfileKind::Sine,
        };
        let coeffs = |r: &Reaction<f64>| match r {
            Reaction::Polynomial(c) => c.clone(),
            Reaction::Custom(_) => unreachable!("shipped scenarios use polynomial reactions"),
        };
        Ok(Self {
            scenario: name.into(),
            profile: ProfileConfig {
                kind,
                period: p.period,
                alpha: p.alpha,
                amplitude: p.amplitude,
                offset: p.offset,
                modulation: p.modulation.at_zero,
                modulation_slope: p.modulation.slope,
            },
            nonlinearity: NonlinearityConfig {
                f: coeffs(&sc.nonlinearity.f),
                g: coeffs(&sc.nonlinearity.g),
                cutoff: sc.nonlinearity.cutoff,
            },
            eps0: sc.ladder.eps0,
            levels: sc.ladder.levels,
            h0: sc.mesh.h0,
            h_interior: sc.mesh.h_interior,
            tolerances: Tolerances {
                nonlinear: 1e-10,
                linear: 1e-12,
                eigen: 1e-8,
                estimator: 1e-3,
            },
            eigen_count: 5,
            control: true,
            out: PathBuf::from("results"),
            seed: DEFAULT_SEED,
        })
    }

    /// The scenario with every configured override applied and validated.
    pub fn build_scenario(&self) -> Result<Scenario<f64>, ConfigError> {
        let mut sc = Scenario::<f64>::shipped(&self.scenario).map_err(|e| ConfigError {
            line: None,
            message: e.to_string(),
        })?;
        let p = &self.profile;
        sc.profile = OscillationProfile {
            shape: match p.kind {
                ProfileKind::Constant => ProfileShape::Constant,
                ProfileKind::Sawtooth => ProfileShape::Sawtooth,
                ProfileKind::Sine => ProfileShape::Sine,
            },
            period: p.period,
            alpha: p.alpha,
            amplitude: p.amplitude,
            offset: p.offset,
            modulation: Modulation {
                at_zero: p.modulation,
                slope: p.modulation_slope,
            },
            ..sc.profile.clone()
        };
        let nl = &self.nonlinearity;
        sc.nonlinearity = Nonlinearity::new(
            Reaction::Polynomial(nl.f.clone()),
            Reaction::Polynomial(nl.g.clone()),
            nl.cutoff,
        );
        sc.ladder = Ladder {
            eps0: self.eps0,
            levels: self.levels,
        };
        sc.mesh = MeshPolicy {
            h0: self.h0,
            h_interior: self.h_interior,
        };
        sc.validate().map_err(|e| ConfigError {
            line: None,
            message: format!("invalid scenario: {e}"),
        })?;
        Ok(sc)
    }

    /// Canonical text form: every key, in a fixed order, with defaults filled in.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let p = &self.profile;
        let nl = &self.nonlinearity;
        let t = &self.tolerances;
        let list = |v: &[f64]| {
            if v.is_empty() {
                "0".to_string()
            } else {
                v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
            }
        };
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "\n[profile]");
        let _ = writeln!(s, "kind = {}", p.kind.name());
        for (k, v) in [
            ("period", p.period),
            ("alpha", p.alpha),
            ("amplitude", p.amplitude),
            ("offset", p.offset),
            ("modulation", p.modulation),
            ("modulation_slope", p.modulation_slope),
        ] {
            let _ = writeln!(s, "{k} = {}", num(v));
        }
        let _ = writeln!(s, "\n[nonlinearity]");
        let _ = writeln!(s, "f = {}", list(&nl.f));
        let _ = writeln!(s, "g = {}", list(&nl.g));
        let _ = writeln!(s, "cutoff = {}", num(nl.cutoff));
        let _ = writeln!(s, "\n[ladder]");
        let _ = writeln!(s, "eps0 = {}", num(self.eps0));
        let _ = writeln!(s, "levels = {}", self.levels);
        let _ = writeln!(s, "\n[mesh]");
        let _ = writeln!(s, "h0 = {}", num(self.h0));
        let _ = writeln!(s, "h_interior = {}", num(self.h_interior));
        let _ = writeln!(s, "\n[tolerances]");
        for (k, v) in [
            ("nonlinear", t.nonlinear),
            ("linear", t.linear),
            ("eigen", t.eigen),
            ("estimator", t.estimator),
        ] {
            let _ = writeln!(s, "{k} = {}", num(v));
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "eigen_count = {}", self.eigen_count);
        let _ = writeln!(s, "control = {}", self.control);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

/// Shortest decimal that reads back to the same `f64`.
fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

struct Entry {
    value: String,
    line: usize,
}

fn parse_f64(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| err(e.line, format!("`{key}`: malformed number `{}`", e.value)))?;
    if !v.is_finite() {
        return Err(err(e.line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn parse_positive(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(e, key)?;
    if v <= 0.0 {
        return Err(err(e.line, format!("`{key}` must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_count(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    let v: usize = e.value.parse().map_err(|_| {
        err(
            e.line,
            format!("`{key}`: expected a non-negative integer, got `{}`", e.value),
        )
    })?;
    if v == 0 {
        return Err(err(e.line, format!("`{key}` must be at least 1")));
    }
    Ok(v)
}

fn parse_bool(e: &Entry, key: &str) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(err(e.line, format!("`{key}`: expected true or false, got `{other}`"))),
    }
}

fn parse_list(e: &Entry, key: &str) -> Result<Vec<f64>, ConfigError> {
    let mut v = e
        .value
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(e.line, format!("`{key}`: malformed coefficient `{t}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    while v.last() == Some(&0.0) {
        v.pop();
    }
    Ok(v)
}

const KEYS: &[(&str, &[&str])] = &[
    ("", &["scenario"]),
    (
        "profile",
        &[
            "kind",
            "period",
            "alpha",
            "amplitude",
            "offset",
            "modulation",
            "modulation_slope",
        ],
    ),
    ("nonlinearity", &["f", "g", "cutoff"]),
    ("ladder", &["eps0", "levels"]),
    ("mesh", &["h0", "h_interior"]),
    ("tolerances", &["nonlinear", "linear", "eigen", "estimator"]),
    ("run", &["eigen_count", "control", "out", "seed"]),
];

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Configuration, ConfigError> {
    let mut entries: HashMap<(String, String), Entry> = HashMap::new();
    let mut section = String::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(err(line, format!("unknown section `[{name}]`")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map_or(&[][..], |(_, k)| *k);
        if !allowed.contains(&key) {
            let place = if section.is_empty() {
                "at top level".to_string()
            } else {
                format!("in section [{section}]")
            };
            return Err(err(line, format!("unknown key `{key}` {place}")));
        }
        if value.is_empty() {
            return Err(err(line, format!("`{key}` has no value")));
        }
        let slot = (section.clone(), key.to_string());
        if let Some(first) = entries.get(&slot) {
            return Err(err(
                line,
                format!(
                    "duplicate key `{key}` (first set on line {}, again on line {line})",
                    first.line
                ),
            ));
        }
        entries.insert(
            slot,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let get = |section: &str, key: &str| entries.get(&(section.to_string(), key.to_string()));
    let scenario = get("", "scenario").ok_or_else(|| ConfigError {
        line: None,
        message: "missing required key `scenario`".into(),
    })?;
    if !SHIPPED.contains(&scenario.value.as_str()) {
        return Err(err(
            scenario.line,
            format!(
                "unknown scenario `{}` (expected one of {})",
                scenario.value,
                SHIPPED.join(", ")
            ),
        ));
    }
    let mut c = Configuration::for_scenario(&scenario.value)?;

    if let Some(e) = get("profile", "kind") {
        c.profile.kind = match e.value.as_str() {
            "constant" => ProfileKind::Constant,
            "sawtooth" => ProfileKind::Sawtooth,
            "sine" => ProfileKind::Sine,
            other => {
                return Err(err(
                    e.line,
                    format!("unknown profile kind `{other}` (expected constant, sawtooth or sine)"),
                ))
            }
        };
    }
    if let Some(e) = get("profile", "period") {
        c.profile.period = parse_positive(e, "period")?;
    }
    if let Some(e) = get("profile", "alpha") {
        let a = parse_f64(e, "alpha")?;
        if !(a > 0.0 && a <= 1.0) {
            return Err(err(e.line, format!("`alpha` must lie in (0, 1], got {a}")));
        }
        c.profile.alpha = a;
    }
    if let Some(e) = get("profile", "amplitude") {
        c.profile.amplitude = parse_f64(e, "amplitude")?;
    }
    if let Some(e) = get("profile", "offset") {
        c.profile.offset = parse_f64(e, "offset")?;
    }
    if let Some(e) = get("profile", "modulation") {
        c.profile.modulation = parse_f64(e, "modulation")?;
    }
    if let Some(e) = get("profile", "modulation_slope") {
        c.profile.modulation_slope = parse_f64(e, "modulation_slope")?;
    }
    if let Some(e) = get("nonlinearity", "f") {
        c.nonlinearity.f = parse_list(e, "f")?;
    }
    if let Some(e) = get("nonlinearity", "g") {
        c.nonlinearity.g = parse_list(e, "g")?;
    }
    if let Some(e) = get("nonlinearity", "cutoff") {
        c.nonlinearity.cutoff = parse_positive(e, "cutoff")?;
    }
    if let Some(e) = get("ladder", "eps0") {
        c.eps0 = parse_positive(e, "eps0")?;
    }
    if let Some(e) = get("ladder", "levels") {
        c.levels = parse_count(e, "levels")?;
    }
    if let Some(e) = get("mesh", "h0") {
        c.h0 = parse_positive(e, "h0")?;
    }
    if let Some(e) = get("mesh", "h_interior") {
        c.h_interior = parse_positive(e, "h_interior")?;
    }
    for (key, slot) in [
        ("nonlinear", &mut c.tolerances.nonlinear),
        ("linear", &mut c.tolerances.linear),
        ("eigen", &mut c.tolerances.eigen),
        ("estimator", &mut c.tolerances.estimator),
    ] {
        if let Some(e) = get("tolerances", key) {
            *slot = parse_positive(e, key)?;
        }
    }
    if let Some(e) = get("run", "eigen_count") {
        c.eigen_count = parse_count(e, "eigen_count")?;
    }
    if let Some(e) = get("run", "control") {
        c.control = parse_bool(e, "control")?;
    }
    if let Some(e) = get("run", "out") {
        c.out = PathBuf::from(&e.value);
    }
    if let Some(e) = get("run", "seed") {
        c.seed = e.value.parse().map_err(|_| {
            err(
                e.line,
                format!("`seed`: expected a non-negative integer, got `{}`", e.value),
            )
        })?;
    }
    c.build_scenario()?;
    Ok(c)
}
