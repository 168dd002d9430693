//! Run configuration: sections of `key=value` pairs.
//!
//! ```text
//! [process.a]
//! kind=psdbp family=binomial_bh K=100
//! [run]
//! command=simulate z0=10 generations=1000
//! ```
//!
//! The full grammar is in `docs/config.md`. [`RunConfig::render`] produces
//! the canonical text, which parses back to an equal config.

use crate::error::CliError;
use branchlink::estimator::{Side, StartRule};
use branchlink::grammar::GrammarError;
use branchlink::{ControlMap, ControlSpec, Distribution, OffspringFamily, ProcessSpec, Rate};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Moments,
    Equivalence,
    Match,
    Bound,
    Tvd,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Equivalence => "equivalence",
            Command::Match => "match",
            Command::Bound => "bound",
            Command::Tvd => "tvd",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "moments" => Command::Moments,
            "equivalence" => Command::Equivalence,
            "match" => Command::Match,
            "bound" => Command::Bound,
            "tvd" => Command::Tvd,
            _ => return Err("one of simulate, moments, equivalence, match, bound, tvd".into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err("csv or json".into()),
        }
    }
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Options of the `[run]` section; `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub command: Option<Command>,
    pub z0: Option<u64>,
    pub generations: Option<u64>,
    pub paths: Option<u64>,
    pub capacities: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub m: Option<u64>,
    pub path_lengths: Option<Vec<u32>>,
    pub n: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub zs: Option<Vec<f64>>,
    pub z_min: Option<u64>,
    pub z_max: Option<u64>,
    pub cap: Option<u64>,
    pub x_cap: Option<u64>,
    pub tail_tol: Option<f64>,
    pub seed: Option<u64>,
    pub side: Option<Side>,
    pub start_rules: Option<Vec<StartRule>>,
    pub workers: Option<usize>,
    pub cache_cap: Option<usize>,
    pub format: Option<Format>,
    pub output: Option<String>,
    pub plot: Option<bool>,
}

/// Keys of the `[run]` section in canonical order.
pub const RUN_KEYS: &[&str] = &[
    "command", "z0", "generations", "paths", "K", "lambda", "M", "k", "N", "alpha", "z", "z_min", "z_max", "cap",
    "x_cap", "tail_tol", "seed", "side", "z0_rule", "workers", "cache_cap", "format", "output", "plot",
];

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    for part in value.split(',') {
        if let Some((a, b)) = part.split_once("..") {
            // integer ranges `a..b` and `a..b:step`, inclusive
            let (b, step) = match b.split_once(':') {
                Some((b, s)) => (b, s.parse::<u64>().map_err(|_| format!("bad step in `{part}`"))?),
                None => (b, 1),
            };
            let (a, b) = (a.parse::<u64>(), b.parse::<u64>());
            let (Ok(a), Ok(b)) = (a, b) else {
                return Err(format!("bad range `{part}`"));
            };
            if step == 0 || b < a {
                return Err(format!("empty range `{part}`"));
            }
            for v in (a..=b).step_by(step as usize) {
                out.push(v.to_string().parse().map_err(|_| format!("bad value {v}"))?);
            }
        } else {
            out.push(part.parse().map_err(|_| format!("bad list element `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn start_rule_name(r: StartRule) -> &'static str {
    match r {
        StartRule::One => "one",
        StartRule::CarryingCapacity => "carrying_capacity",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Psdbp => "psdbp",
        Side::Cbp => "cbp",
    }
}

fn scalar<T: FromStr>(value: &str, what: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("expected {what}"))
}

impl RunOptions {
    /// Sets `key` from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "command" => self.command = Some(value.parse()?),
            "z0" => self.z0 = Some(scalar(value, "a non-negative integer")?),
            "generations" => self.generations = Some(scalar(value, "a non-negative integer")?),
            "paths" => self.paths = Some(positive_int(value)?),
            "K" => {
                let ks: Vec<f64> = parse_list(value)?;
                if ks.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
                    return Err("carrying capacities must be positive".into());
                }
                self.capacities = Some(ks)
            }
            "lambda" => {
                let l: f64 = scalar(value, "a number")?;
                if !(l > 0.0 && l.is_finite()) {
                    return Err("must be positive".into());
                }
                self.lambda = Some(l)
            }
            "M" => self.m = Some(scalar(value, "a non-negative integer")?),
            "k" => {
                let ks: Vec<u32> = parse_list(value)?;
                if ks.contains(&0) {
                    return Err("path lengths must be at least 1".into());
                }
                self.path_lengths = Some(ks)
            }
            "N" => self.n = Some(positive_int(value)?),
            "alpha" => {
                let a: Vec<f64> = parse_list(value)?;
                if a.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                    return Err("alpha must lie in (0, 1)".into());
                }
                self.alphas = Some(a)
            }
            "z" => {
                let z: Vec<f64> = parse_list(value)?;
                if z.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
                    return Err("states must be positive".into());
                }
                self.zs = Some(z)
            }
            "z_min" => self.z_min = Some(scalar(value, "a non-negative integer")?),
            "z_max" => self.z_max = Some(scalar(value, "a non-negative integer")?),
            "cap" => self.cap = Some(positive_int(value)?),
            "x_cap" => self.x_cap = Some(positive_int(value)?),
            "tail_tol" => {
                let t: f64 = scalar(value, "a number")?;
                if !(t > 0.0 && t < 1.0) {
                    return Err("must lie in (0, 1)".into());
                }
                self.tail_tol = Some(t)
            }
            "seed" => self.seed = Some(scalar(value, "a 64-bit unsigned integer")?),
            "side" => self.side = Some(value.parse()?),
            "z0_rule" => {
                let rules = value.split(',').map(StartRule::from_str).collect::<Result<Vec<_>, _>>()?;
                self.start_rules = Some(rules)
            }
            "workers" => self.workers = Some(positive_int(value)? as usize),
            "cache_cap" => self.cache_cap = Some(scalar(value, "a non-negative integer")?),
            "format" => self.format = Some(value.parse()?),
            "output" => self.output = Some(value.to_string()),
            "plot" => self.plot = Some(scalar(value, "true or false")?),
            _ => return Err(format!("unknown run key (expected one of {})", RUN_KEYS.join(", "))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        match key {
            "command" => self.command.map(|c| c.name().to_string()),
            "z0" => self.z0.map(|v| v.to_string()),
            "generations" => self.generations.map(|v| v.to_string()),
            "paths" => self.paths.map(|v| v.to_string()),
            "K" => self.capacities.as_deref().map(join),
            "lambda" => self.lambda.map(|v| v.to_string()),
            "M" => self.m.map(|v| v.to_string()),
            "k" => self.path_lengths.as_deref().map(join),
            "N" => self.n.map(|v| v.to_string()),
            "alpha" => self.alphas.as_deref().map(join),
            "z" => self.zs.as_deref().map(join),
            "z_min" => self.z_min.map(|v| v.to_string()),
            "z_max" => self.z_max.map(|v| v.to_string()),
            "cap" => self.cap.map(|v| v.to_string()),
            "x_cap" => self.x_cap.map(|v| v.to_string()),
            "tail_tol" => self.tail_tol.map(|v| v.to_string()),
            "seed" => self.seed.map(|v| v.to_string()),
            "side" => self.side.map(|s| side_name(s).to_string()),
            "z0_rule" => self
                .start_rules
                .as_ref()
                .map(|r| r.iter().map(|r| start_rule_name(*r)).collect::<Vec<_>>().join(",")),
            "workers" => self.workers.map(|v| v.to_string()),
            "cache_cap" => self.cache_cap.map(|v| v.to_string()),
            "format" => self.format.map(|f| f.name().to_string()),
            "output" => self.output.clone(),
            "plot" => self.plot.map(|v| v.to_string()),
            _ => None,
        }
    }
}

fn positive_int(value: &str) -> Result<u64, String> {
    match value.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err("expected a positive integer".into()),
    }
}

/// Unresolved process section; values are stored without whitespace.
#[derive(Debug, Clone, Default)]
pub struct ProcessTemplate {
    pub entries: BTreeMap<String, String>,
    /// Source line of each key, for diagnostics.
    pub lines: BTreeMap<String, usize>,
    pub header_line: usize,
}

impl PartialEq for ProcessTemplate {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

/// Equality ignores source positions.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub processes: BTreeMap<String, ProcessTemplate>,
    pub run: RunOptions,
    /// Source line of each `[run]` key, for diagnostics.
    pub run_lines: BTreeMap<String, usize>,
}

impl PartialEq for RunConfig {
    fn eq(&self, other: &Self) -> bool {
        self.processes == other.processes && self.run == other.run
    }
}

/// Values taken from `[run]` when a process section leaves them out.
#[derive(Debug, Clone, Copy, Default)]
pub struct Context {
    pub capacity: Option<f64>,
    pub lambda: Option<f64>,
    pub m: Option<u64>,
}

fn parse_error(line: usize, column: usize, expected: &str, found: &str) -> CliError {
    CliError::Parse { line, column, expected: expected.into(), found: found.into() }
}

/// Splits a line into whitespace-separated tokens outside brackets,
/// returning each token with its 1-based column.
fn tokens(text: &str, line: usize) -> Result<Vec<(usize, String)>, CliError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(parse_error(line, i + 1, "a balanced bracket", &format!("`{c}`")));
                }
            }
            _ => {}
        }
        if c.is_whitespace() && depth == 0 {
            if !current.is_empty() {
                out.push((start + 1, std::mem::take(&mut current)));
            }
            continue;
        }
        if current.is_empty() {
            start = i;
        }
        if !c.is_whitespace() {
            current.push(c);
        }
    }
    if depth != 0 {
        return Err(parse_error(line, text.len() + 1, "a closing bracket", "end of line"));
    }
    if !current.is_empty() {
        out.push((start + 1, current));
    }
    Ok(out)
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

enum Section {
    None,
    Process(String),
    Run,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut section = Section::None;
    let mut run_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut rest = body.trim_start();
        let mut offset = body.len() - rest.len();
        if rest.starts_with('[') {
            let Some(close) = rest.find(']') else {
                return Err(parse_error(line, offset + rest.len() + 1, "`]`", "end of line"));
            };
            let name = rest[1..close].trim();
            section = if name == "run" {
                if run_seen {
                    return Err(CliError::Validation { line, key: "[run]".into(), message: "duplicate section".into() });
                }
                run_seen = true;
                Section::Run
            } else if let Some(p) = name.strip_prefix("process.").filter(|p| is_key(p)) {
                if cfg.processes.contains_key(p) {
                    return Err(CliError::Validation { line, key: format!("[process.{p}]"), message: "duplicate section".into() });
                }
                cfg.processes.insert(p.to_string(), ProcessTemplate { header_line: line, ..Default::default() });
                Section::Process(p.to_string())
            } else {
                return Err(parse_error(line, offset + 2, "`run` or `process.<name>`", &format!("`{name}`")));
            };
            offset += close + 1;
            rest = &rest[close + 1..];
        }
        for (col, tok) in tokens(rest, line)? {
            let column = offset + col;
            let Some((key, value)) = tok.split_once('=') else {
                return Err(parse_error(line, column, "`key=value`", &format!("`{tok}`")));
            };
            if !is_key(key) {
                return Err(parse_error(line, column, "a key", &format!("`{key}`")));
            }
            if value.is_empty() {
                return Err(parse_error(line, column + tok.len(), "a value", "end of token"));
            }
            match &section {
                Section::None => {
                    return Err(parse_error(line, column, "a section header before keys", &format!("`{key}`")));
                }
                Section::Run => {
                    if cfg.run_lines.insert(key.to_string(), line).is_some() {
                        return Err(CliError::Validation { line, key: key.into(), message: "duplicate key".into() });
                    }
                    cfg.run
                        .set(key, value)
                        .map_err(|message| CliError::Validation { line, key: key.into(), message })?;
                }
                Section::Process(p) => {
                    let t = cfg.processes.get_mut(p).expect("section registered");
                    if t.entries.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(CliError::Validation { line, key: key.into(), message: "duplicate key".into() });
                    }
                    t.lines.insert(key.to_string(), line);
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

const PROCESS_KEY_ORDER: &[&str] = &["kind", "family", "control", "phi", "psi", "q", "offspring", "lambda", "M", "K", "r"];

impl RunConfig {
    /// Canonical text; parses back to an equal config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, t) in &self.processes {
            writeln!(out, "[process.{name}]").unwrap();
            let mut keys: Vec<&String> = t.entries.keys().collect();
            keys.sort_by_key(|k| (PROCESS_KEY_ORDER.iter().position(|o| o == k).unwrap_or(usize::MAX), k.to_string()));
            for k in keys {
                writeln!(out, "{k}={}", t.entries[k]).unwrap();
            }
        }
        writeln!(out, "[run]").unwrap();
        for key in RUN_KEYS {
            if let Some(v) = self.run.get(key) {
                writeln!(out, "{key}={v}").unwrap();
            }
        }
        out
    }

    pub fn run_line(&self, key: &str) -> usize {
        self.run_lines.get(key).copied().unwrap_or(0)
    }

    pub fn process(&self, name: &str) -> Result<&ProcessTemplate, CliError> {
        self.processes.get(name).ok_or_else(|| CliError::Validation {
            line: 0,
            key: format!("[process.{name}]"),
            message: "section is required by this command".into(),
        })
    }

    /// Context for resolving process templates at carrying capacity `capacity`.
    pub fn context(&self, capacity: Option<f64>) -> Context {
        Context {
            capacity: capacity.or_else(|| self.run.capacities.as_ref().and_then(|k| k.first().copied())),
            lambda: self.run.lambda,
            m: self.run.m,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), CliError> {
        if let (Some(lo), Some(hi)) = (self.run.z_min, self.run.z_max) {
            if hi < lo {
                return Err(CliError::Validation {
                    line: self.run_line("z_max"),
                    key: "z_max".into(),
                    message: format!("must be at least z_min = {lo}"),
                });
            }
        }
        // every capacity on the grid must resolve
        let capacities: Vec<Option<f64>> = match &self.run.capacities {
            Some(ks) => ks.iter().map(|k| Some(*k)).collect(),
            None => vec![None],
        };
        for t in self.processes.values() {
            for &k in &capacities {
                t.resolve(&self.context(k))?;
            }
        }
        Ok(())
    }
}

/// Parameters a bare family name can take from loose keys, in term order.
fn family_params(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "binomial_bh" => &["K"],
        "poisson_scaled" => &["lambda"],
        "poisson_ricker" => &["r", "K"],
        "nb_logistic" => &["lambda", "M", "K"],
        "nb_shift_gated" => &["lambda", "M"],
        "three_point" => &[],
        _ => return None,
    })
}

fn is_bare(value: &str) -> bool {
    is_key(value)
}

impl ProcessTemplate {
    fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(self.header_line)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::Validation { line: self.line(key), key: key.into(), message: message.into() }
    }

    fn grammar(&self, key: &str, e: GrammarError) -> CliError {
        // attribute argument errors to the loose key that supplied the argument
        let culprit = match &e {
            GrammarError::UnexpectedArgument { key: k, .. } | GrammarError::BadValue { key: k, .. }
                if self.entries.contains_key(k.as_str()) =>
            {
                k.clone()
            }
            _ => key.to_string(),
        };
        self.invalid(&culprit, e.to_string())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Validation { line: self.header_line, key: key.into(), message: "missing key".into() })
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(self.invalid(key, format!("not a key of this process kind (expected one of {})", allowed.join(", "))));
            }
        }
        Ok(())
    }

    fn loose(&self, key: &str, ctx: &Context) -> Option<String> {
        self.entries.get(key).cloned().or_else(|| match key {
            "K" => ctx.capacity.map(|v| v.to_string()),
            "lambda" => ctx.lambda.map(|v| v.to_string()),
            "M" => ctx.m.map(|v| v.to_string()),
            _ => None,
        })
    }

    pub fn resolve(&self, ctx: &Context) -> Result<ProcessSpec, CliError> {
        let kind = self.require("kind")?;
        match kind {
            "psdbp" => self.resolve_psdbp(ctx),
            "dcbp" => {
                self.check_keys(&["kind", "phi", "offspring"])?;
                let phi = ControlMap::from_str(self.require("phi")?).map_err(|e| self.grammar("phi", e))?;
                let offspring = self.distribution("offspring")?;
                Ok(ProcessSpec::dcbp(phi, offspring))
            }
            "cbp" => self.resolve_cbp(ctx),
            _ => Err(self.invalid("kind", "expected psdbp, cbp or dcbp")),
        }
    }

    fn distribution(&self, key: &str) -> Result<Distribution, CliError> {
        Distribution::from_str(self.require(key)?).map_err(|e| self.grammar(key, e))
    }

    fn resolve_psdbp(&self, ctx: &Context) -> Result<ProcessSpec, CliError> {
        let family = self.require("family")?;
        let text = match family_params(family).filter(|_| is_bare(family)) {
            Some(params) => {
                let mut allowed = vec!["kind", "family"];
                allowed.extend_from_slice(params);
                self.check_keys(&allowed)?;
                let mut args = Vec::new();
                for p in params {
                    let v = self.loose(p, ctx).ok_or_else(|| {
                        self.invalid("family", format!("`{family}` needs `{p}` (in this section or in [run])"))
                    })?;
                    args.push(format!("{p}={v}"));
                }
                if args.is_empty() {
                    family.to_string()
                } else {
                    format!("{family}({})", args.join(","))
                }
            }
            None => {
                self.check_keys(&["kind", "family"])?;
                family.to_string()
            }
        };
        let fam = OffspringFamily::from_str(&text).map_err(|e| self.grammar("family", e))?;
        Ok(ProcessSpec::psdbp(fam))
    }

    fn resolve_cbp(&self, ctx: &Context) -> Result<ProcessSpec, CliError> {
        let control = self.require("control")?;
        let offspring = self.distribution("offspring")?;
        if !is_bare(control) {
            self.check_keys(&["kind", "control", "offspring"])?;
            let c = ControlSpec::from_str(control).map_err(|e| self.grammar("control", e))?;
            return Ok(ProcessSpec::cbp(c, offspring));
        }
        let map = |key: &str| -> Result<ControlMap, CliError> {
            ControlMap::from_str(self.require(key)?).map_err(|e| self.grammar(key, e))
        };
        let spec = match control {
            "deterministic" => {
                self.check_keys(&["kind", "control", "phi", "offspring"])?;
                ControlSpec::Deterministic(map("phi")?)
            }
            "poisson" => {
                self.check_keys(&["kind", "control", "psi", "offspring"])?;
                ControlSpec::Poisson { psi: map("psi")? }
            }
            "negbin" => {
                self.check_keys(&["kind", "control", "psi", "q", "offspring"])?;
                let q: f64 = self.require("q")?.parse().map_err(|_| self.invalid("q", "expected a number"))?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(self.invalid("q", format!("q = {q} must lie in (0, 1)")));
                }
                ControlSpec::NegBin { psi: map("psi")?, q }
            }
            "binomial" | "scaled_bernoulli" => {
                self.check_keys(&["kind", "control", "psi", "q", "offspring", "lambda", "M", "K"])?;
                let psi = map("psi")?;
                let rate = self.rate(&psi, &offspring, ctx)?;
                if control == "binomial" {
                    ControlSpec::Binomial { psi, rate }
                } else {
                    ControlSpec::ScaledBernoulli { scale: psi, rate }
                }
            }
            _ => {
                return Err(self.invalid(
                    "control",
                    "expected deterministic, poisson, binomial, negbin, scaled_bernoulli or a full control term",
                ))
            }
        };
        Ok(ProcessSpec::cbp(spec, offspring))
    }

    /// The `q` key: a probability, a rate term, or a `rate_catalog:` alias.
    fn rate(&self, psi: &ControlMap, offspring: &Distribution, ctx: &Context) -> Result<Rate, CliError> {
        let q = self.require("q")?;
        if let Some(name) = q.strip_prefix("rate_catalog:") {
            let capacity = || -> Result<String, CliError> {
                self.loose("K", ctx).ok_or_else(|| self.invalid("q", "the catalog rate needs `K` (here or in [run])"))
            };
            let text = match name {
                "logistic" => {
                    let lambda = self.loose("lambda", ctx).or_else(|| match offspring {
                        Distribution::Poisson { mu } => Some(mu.to_string()),
                        _ => None,
                    });
                    let lambda = lambda.ok_or_else(|| self.invalid("q", "the logistic rate needs `lambda` or Poisson offspring"))?;
                    let m = self.loose("M", ctx).or_else(|| match psi {
                        ControlMap::ShiftGated { m } => Some(m.to_string()),
                        _ => None,
                    });
                    let m = m.ok_or_else(|| self.invalid("q", "the logistic rate needs `M` or psi=shift_gated(M=..)"))?;
                    format!("logistic(lambda={lambda},M={m},K={})", capacity()?)
                }
                "beverton_holt" => format!("beverton_holt(K={})", capacity()?),
                _ => return Err(self.invalid("q", format!("unknown catalog rate `{name}` (expected logistic or beverton_holt)"))),
            };
            return Rate::from_str(&text).map_err(|e| self.grammar("q", e));
        }
        for key in ["lambda", "M", "K"] {
            if self.entries.contains_key(key) {
                return Err(self.invalid(key, "only used by `rate_catalog:` rates"));
            }
        }
        if q.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            return Rate::from_str(&format!("const(p={q})")).map_err(|e| self.invalid("q", e.to_string()));
        }
        Rate::from_str(q).map_err(|e| self.grammar("q", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = "\
[process.a] kind=psdbp family=nb_logistic
[process.b] kind=cbp control=binomial psi=shift_gated(M=2) q=rate_catalog:logistic offspring=poisson(mu=3)
[run] command=tvd K=10,20 lambda=3 M=2 k=1,2 N=1000 seed=42
";

    #[test]
    fn documented_example_resolves() {
        let cfg = parse_config(FIG4).unwrap();
        let b = cfg.process("b").unwrap().resolve(&cfg.context(Some(10.0))).unwrap();
        let (psdbp, cbp) = ProcessSpec::logistic_pair(3.0, 2, 10.0).unwrap();
        assert_eq!(b, cbp);
        assert_eq!(cfg.process("a").unwrap().resolve(&cfg.context(Some(10.0))).unwrap(), psdbp);
        assert_eq!(cfg.run.capacities, Some(vec![10.0, 20.0]));
    }

    #[test]
    fn render_round_trips() {
        let cfg = parse_config(FIG4).unwrap();
        let text = cfg.render();
        assert_eq!(parse_config(&text).unwrap(), cfg);
        assert_eq!(parse_config(&text).unwrap().render(), text);
    }

    #[test]
    fn ranges_expand() {
        assert_eq!(parse_list::<u32>("1..4,10").unwrap(), vec![1, 2, 3, 4, 10]);
        assert_eq!(parse_list::<f64>("5..20:5").unwrap(), vec![5.0, 10.0, 15.0, 20.0]);
        assert!(parse_list::<u32>("4..1").is_err());
    }

    #[test]
    fn diagnostics_name_key_and_line() {
        let text = "[process.a]\nkind=cbp control=binomial psi=identity\nq=1.5 offspring=poisson(mu=3)\n";
        match parse_config(text) {
            Err(CliError::Validation { line: 3, key, .. }) => assert_eq!(key, "q"),
            other => panic!("{other:?}"),
        }
        let text = "[process.a]\nkind=psdbp family=binomial_bh K=100 lambda=3\n";
        match parse_config(text) {
            Err(CliError::Validation { line: 2, key, .. }) => assert_eq!(key, "lambda"),
            other => panic!("{other:?}"),
        }
        let text = "[run]\nseed=1\nN=0\n";
        assert!(matches!(parse_config(text), Err(CliError::Validation { line: 3, .. })));
        let text = "[process.a]\nkind=psdbp family=binomial_bh(K=-1)\n";
        assert!(matches!(parse_config(text), Err(CliError::Validation { line: 2, .. })));
        let text = "[run]\nseed 4\n";
        assert!(matches!(parse_config(text), Err(CliError::Parse { line: 2, column: 1, .. })));
        let text = "[run] z0=(1\n";
        assert!(matches!(parse_config(text), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn full_terms_are_accepted() {
        let text = "[process.a]\nkind=cbp control=binomial(psi=shift_gated(M=2),rate=const(p=1/3)) offspring=poisson(mu=3)\n";
        let cfg = parse_config(text).unwrap();
        let spec = cfg.process("a").unwrap().resolve(&Context::default()).unwrap();
        assert!(matches!(spec, ProcessSpec::Cbp { control: ControlSpec::Binomial { .. }, .. }));
    }
}
