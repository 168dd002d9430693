//! Structured-text form for laws, control maps, rates, offspring families
//! and process specifications.
//!
//! ```text
//! term    = ident [ "{" entry { "," entry } "}" ] [ "(" arg { "," arg } ")" ]
//! entry   = integer ":" value
//! arg     = ident "=" value
//! value   = number | term
//! number  = decimal | integer "/" integer
//! ```
//!
//! Examples: `poisson(mu=3)`, `nb(r=1.5,q=0.25)`, `finite{0:0.25,2:0.75}`,
//! `shift_gated(M=2)`, `binomial(psi=shift_gated(M=2),rate=logistic(lambda=3,M=2,K=100))`.
//! Every `Display` output parses back to an equal value.

use crate::distributions::{Distribution, DistributionError};
use crate::kernels::{ControlMap, ControlSpec, OffspringFamily, ProcessSpec, Rate};
use crate::rational::{self, Rational};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("at column {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("`{term}`: missing argument `{key}`")]
    MissingArgument { term: String, key: &'static str },
    #[error("`{term}`: unexpected argument `{key}`")]
    UnexpectedArgument { term: String, key: String },
    #[error("`{term}`: argument `{key}` = `{value}` is not {expected}")]
    BadValue { term: String, key: String, value: String, expected: &'static str },
    #[error(transparent)]
    Invalid(#[from] DistributionError),
}

/// Parsed but uninterpreted term.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(String),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub entries: Vec<(u64, Value)>,
    pub args: Vec<(String, Value)>,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(s) => f.write_str(s),
            Value::Term(t) => write!(f, "{}", t.name),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&mut self, expected: &str) -> GrammarError {
        let found = match self.peek() {
            Some(c) => format!("`{}`", c as char),
            None => "end of input".into(),
        };
        GrammarError::Syntax { pos: self.pos + 1, expected: expected.into(), found }
    }

    fn expect(&mut self, c: u8) -> Result<(), GrammarError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", c as char)))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            self.pos = start;
            return Err(self.error("identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<String, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let sign_ok = (c == b'-' || c == b'+')
                && (self.pos == start || matches!(self.src[self.pos - 1], b'e' | b'E' | b'/'));
            if c.is_ascii_digit() || matches!(c, b'.' | b'/' | b'e' | b'E') || sign_ok {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error("number"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn value(&mut self) -> Result<Value, GrammarError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => Ok(Value::Number(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => Ok(Value::Term(self.term()?)),
            _ => Err(self.error("number or term")),
        }
    }

    fn term(&mut self) -> Result<Term, GrammarError> {
        let name = self.ident()?;
        let mut entries = Vec::new();
        let mut args = Vec::new();
        if self.eat(b'{')
            && !self.eat(b'}') {
                loop {
                    let key = self.number()?;
                    let key = key.parse::<u64>().map_err(|_| GrammarError::Syntax {
                        pos: self.pos,
                        expected: "non-negative integer key".into(),
                        found: format!("`{key}`"),
                    })?;
                    self.expect(b':')?;
                    entries.push((key, self.value()?));
                    if self.eat(b'}') {
                        break;
                    }
                    self.expect(b',')?;
                }
            }
        if self.eat(b'(')
            && !self.eat(b')') {
                loop {
                    let key = self.ident()?;
                    self.expect(b'=')?;
                    args.push((key, self.value()?));
                    if self.eat(b')') {
                        break;
                    }
                    self.expect(b',')?;
                }
            }
        Ok(Term { name, entries, args })
    }
}

/// Parses one complete term.
pub fn parse_term(text: &str) -> Result<Term, GrammarError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.error("end of input"));
    }
    Ok(t)
}

/// Argument access with unknown-key checking.
struct Args<'t> {
    term: &'t Term,
    used: Vec<bool>,
}

impl<'t> Args<'t> {
    fn new(term: &'t Term) -> Self {
        Self { term, used: vec![false; term.args.len()] }
    }

    fn get(&mut self, key: &'static str) -> Option<&'t Value> {
        let i = self.term.args.iter().position(|(k, _)| k.eq_ignore_ascii_case(key))?;
        self.used[i] = true;
        Some(&self.term.args[i].1)
    }

    fn req(&mut self, key: &'static str) -> Result<&'t Value, GrammarError> {
        self.get(key).ok_or_else(|| GrammarError::MissingArgument { term: self.term.name.clone(), key })
    }

    fn bad(&self, key: &str, v: &Value, expected: &'static str) -> GrammarError {
        GrammarError::BadValue { term: self.term.name.clone(), key: key.into(), value: v.to_string(), expected }
    }

    fn rational(&mut self, key: &'static str) -> Result<Rational, GrammarError> {
        let v = self.req(key)?;
        match v {
            Value::Number(s) => rational::parse(s).ok_or_else(|| self.bad(key, v, "a number")),
            Value::Term(_) => Err(self.bad(key, v, "a number")),
        }
    }

    fn real(&mut self, key: &'static str) -> Result<f64, GrammarError> {
        let v = self.req(key)?;
        let Value::Number(s) = v else {
            return Err(self.bad(key, v, "a number"));
        };
        if let Ok(x) = s.parse::<f64>() {
            return Ok(x);
        }
        rational::parse(s).map(|r| rational::to_f64(&r)).ok_or_else(|| self.bad(key, v, "a number"))
    }

    fn int(&mut self, key: &'static str) -> Result<u64, GrammarError> {
        let v = self.req(key)?;
        match v {
            Value::Number(s) => s.parse().map_err(|_| self.bad(key, v, "a non-negative integer")),
            Value::Term(_) => Err(self.bad(key, v, "a non-negative integer")),
        }
    }

    fn term_arg(&mut self, key: &'static str) -> Result<&'t Term, GrammarError> {
        let v = self.req(key)?;
        match v {
            Value::Term(t) => Ok(t),
            Value::Number(_) => Err(self.bad(key, v, "a term")),
        }
    }

    fn finish(self) -> Result<(), GrammarError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(GrammarError::UnexpectedArgument {
                term: self.term.name.clone(),
                key: self.term.args[i].0.clone(),
            }),
            None => Ok(()),
        }
    }
}

fn no_entries(t: &Term) -> Result<(), GrammarError> {
    if t.entries.is_empty() {
        Ok(())
    } else {
        Err(GrammarError::Syntax { pos: 0, expected: format!("no table entries for `{}`", t.name), found: "`{`".into() })
    }
}

fn entry_number(t: &Term, v: &Value) -> Result<String, GrammarError> {
    match v {
        Value::Number(s) => Ok(s.clone()),
        Value::Term(_) => Err(GrammarError::BadValue {
            term: t.name.clone(),
            key: "entry".into(),
            value: v.to_string(),
            expected: "a number",
        }),
    }
}

fn entry_term<'t>(t: &Term, v: &'t Value) -> Result<&'t Term, GrammarError> {
    match v {
        Value::Term(inner) => Ok(inner),
        Value::Number(_) => Err(GrammarError::BadValue {
            term: t.name.clone(),
            key: "entry".into(),
            value: v.to_string(),
            expected: "a term",
        }),
    }
}

// ---------------------------------------------------------------- distributions

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::PointMass(c) => write!(f, "point(c={c})"),
            Distribution::Bernoulli { p } => write!(f, "bernoulli(p={p})"),
            Distribution::Binomial { n, p } => write!(f, "binomial(n={n},p={p})"),
            Distribution::Poisson { mu } => write!(f, "poisson(mu={mu})"),
            Distribution::Geometric { q } => write!(f, "geometric(q={q})"),
            Distribution::NegativeBinomial { r, q } => write!(f, "nb(r={r},q={q})"),
            Distribution::ZeroInflatedPoisson { pi0, lambda } => write!(f, "zip(pi0={pi0},lambda={lambda})"),
            Distribution::ZeroInflatedGeometric { p, q } => write!(f, "zig(p={p},q={q})"),
            Distribution::ScaledBernoulli { s, p } => write!(f, "scaled_bernoulli(s={s},p={p})"),
            Distribution::FiniteSupport(law) => {
                f.write_str("finite{")?;
                for (i, (k, p)) in law.atoms().iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}:{p}")?;
                }
                f.write_str("}")
            }
        }
    }
}

pub fn distribution_from_term(t: &Term) -> Result<Distribution, GrammarError> {
    if t.name == "finite" {
        if !t.args.is_empty() {
            return Err(GrammarError::UnexpectedArgument { term: t.name.clone(), key: t.args[0].0.clone() });
        }
        let mut atoms = Vec::with_capacity(t.entries.len());
        for (k, v) in &t.entries {
            let s = entry_number(t, v)?;
            let p = s
                .parse::<f64>()
                .ok()
                .or_else(|| rational::parse(&s).map(|r| rational::to_f64(&r)))
                .ok_or_else(|| GrammarError::BadValue {
                    term: t.name.clone(),
                    key: k.to_string(),
                    value: s.clone(),
                    expected: "a probability",
                })?;
            atoms.push((*k, p));
        }
        return Ok(Distribution::finite(atoms)?);
    }
    no_entries(t)?;
    let mut a = Args::new(t);
    let d = match t.name.as_str() {
        "point" => Distribution::point(a.int("c")?),
        "bernoulli" => Distribution::bernoulli(a.real("p")?)?,
        "binomial" => Distribution::binomial(a.int("n")?, a.real("p")?)?,
        "poisson" => Distribution::poisson(a.real("mu")?)?,
        "geometric" => Distribution::geometric(a.real("q")?)?,
        "nb" | "negative_binomial" => Distribution::negative_binomial(a.real("r")?, a.real("q")?)?,
        "zip" => Distribution::zero_inflated_poisson(a.real("pi0")?, a.real("lambda")?)?,
        "zig" => Distribution::zero_inflated_geometric(a.real("p")?, a.real("q")?)?,
        "scaled_bernoulli" => Distribution::scaled_bernoulli(a.int("s")?, a.real("p")?)?,
        other => return Err(GrammarError::UnknownName { kind: "distribution", name: other.into() }),
    };
    a.finish()?;
    Ok(d)
}

impl FromStr for Distribution {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        distribution_from_term(&parse_term(s)?)
    }
}

// ---------------------------------------------------------------- control maps

impl fmt::Display for ControlMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlMap::Identity => f.write_str("identity"),
            ControlMap::AffineFloor { a, b } => {
                write!(f, "affine(a={},b={})", rational::format(a), rational::format(b))
            }
            ControlMap::MaxShift { c } => write!(f, "max_shift(c={c})"),
            ControlMap::ShiftGated { m } => write!(f, "shift_gated(M={m})"),
            ControlMap::ParityHalf => f.write_str("parity_half"),
            ControlMap::Table { entries, default } => {
                f.write_str("table{")?;
                write_entries(f, entries)?;
                write!(f, "}}(default={default})")
            }
        }
    }
}

fn write_entries<V: fmt::Display>(f: &mut fmt::Formatter<'_>, entries: &BTreeMap<u64, V>) -> fmt::Result {
    for (i, (k, v)) in entries.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{k}:{v}")?;
    }
    Ok(())
}

pub fn control_map_from_term(t: &Term) -> Result<ControlMap, GrammarError> {
    if t.name == "table" {
        let mut entries = BTreeMap::new();
        for (k, v) in &t.entries {
            let s = entry_number(t, v)?;
            let n = s.parse::<u64>().map_err(|_| GrammarError::BadValue {
                term: t.name.clone(),
                key: k.to_string(),
                value: s.clone(),
                expected: "a non-negative integer",
            })?;
            entries.insert(*k, n);
        }
        let mut a = Args::new(t);
        let default = match a.get("default") {
            Some(Value::Term(d)) => control_map_from_term(d)?,
            Some(v) => return Err(a.bad("default", v, "a control map")),
            None => ControlMap::Identity,
        };
        a.finish()?;
        return Ok(ControlMap::Table { entries, default: Box::new(default) });
    }
    no_entries(t)?;
    let mut a = Args::new(t);
    let m = match t.name.as_str() {
        "identity" => ControlMap::Identity,
        "affine" | "affine_floor" => ControlMap::AffineFloor { a: a.rational("a")?, b: a.rational("b")? },
        "max_shift" => ControlMap::MaxShift { c: a.int("c")? },
        "shift_gated" => ControlMap::ShiftGated { m: a.int("M")? },
        "parity_half" => ControlMap::ParityHalf,
        other => return Err(GrammarError::UnknownName { kind: "control map", name: other.into() }),
    };
    a.finish()?;
    Ok(m)
}

impl FromStr for ControlMap {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        control_map_from_term(&parse_term(s)?)
    }
}

// ---------------------------------------------------------------- rates

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Const(p) => write!(f, "const(p={p})"),
            Rate::BevertonHolt { k } => write!(f, "beverton_holt(K={k})"),
            Rate::Logistic { lambda, m, k } => write!(f, "logistic(lambda={lambda},M={m},K={k})"),
            Rate::ExpGate { scale } => write!(f, "exp_gate(scale={scale})"),
            Rate::Table { entries, default } => {
                f.write_str("table{")?;
                write_entries(f, entries)?;
                write!(f, "}}(default={default})")
            }
        }
    }
}

pub fn rate_from_term(t: &Term) -> Result<Rate, GrammarError> {
    if t.name == "table" {
        let mut entries = BTreeMap::new();
        for (k, v) in &t.entries {
            let s = entry_number(t, v)?;
            let p = s.parse::<f64>().map_err(|_| GrammarError::BadValue {
                term: t.name.clone(),
                key: k.to_string(),
                value: s.clone(),
                expected: "a probability",
            })?;
            check_rate(t, p)?;
            entries.insert(*k, p);
        }
        let mut a = Args::new(t);
        let default = match a.get("default") {
            Some(Value::Term(d)) => rate_from_term(d)?,
            Some(v) => return Err(a.bad("default", v, "a rate")),
            None => return Err(GrammarError::MissingArgument { term: t.name.clone(), key: "default" }),
        };
        a.finish()?;
        return Ok(Rate::Table { entries, default: Box::new(default) });
    }
    no_entries(t)?;
    let mut a = Args::new(t);
    let r = match t.name.as_str() {
        "const" => {
            let p = a.real("p")?;
            check_rate(t, p)?;
            Rate::Const(p)
        }
        "beverton_holt" => Rate::BevertonHolt { k: positive(t, "K", a.real("K")?)? },
        "logistic" => Rate::Logistic {
            lambda: positive(t, "lambda", a.real("lambda")?)?,
            m: a.int("M")?,
            k: positive(t, "K", a.real("K")?)?,
        },
        "exp_gate" => Rate::ExpGate { scale: positive(t, "scale", a.real("scale")?)? },
        other => return Err(GrammarError::UnknownName { kind: "rate", name: other.into() }),
    };
    a.finish()?;
    Ok(r)
}

fn check_rate(t: &Term, p: f64) -> Result<(), GrammarError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GrammarError::BadValue { term: t.name.clone(), key: "p".into(), value: p.to_string(), expected: "in [0, 1]" })
    }
}

fn positive(t: &Term, key: &str, x: f64) -> Result<f64, GrammarError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(GrammarError::BadValue { term: t.name.clone(), key: key.into(), value: x.to_string(), expected: "positive" })
    }
}

impl FromStr for Rate {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        rate_from_term(&parse_term(s)?)
    }
}

// ---------------------------------------------------------------- control specs

impl fmt::Display for ControlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlSpec::Deterministic(map) => write!(f, "deterministic(phi={map})"),
            ControlSpec::Poisson { psi } => write!(f, "poisson(psi={psi})"),
            ControlSpec::Binomial { psi, rate } => write!(f, "binomial(psi={psi},rate={rate})"),
            ControlSpec::NegBin { psi, q } => write!(f, "negbin(psi={psi},q={q})"),
            ControlSpec::ScaledBernoulli { scale, rate } => write!(f, "scaled_bernoulli(scale={scale},rate={rate})"),
        }
    }
}

pub fn control_spec_from_term(t: &Term) -> Result<ControlSpec, GrammarError> {
    no_entries(t)?;
    let mut a = Args::new(t);
    let c = match t.name.as_str() {
        "deterministic" => ControlSpec::Deterministic(control_map_from_term(a.term_arg("phi")?)?),
        "poisson" => ControlSpec::Poisson { psi: control_map_from_term(a.term_arg("psi")?)? },
        "binomial" => ControlSpec::Binomial {
            psi: control_map_from_term(a.term_arg("psi")?)?,
            rate: rate_from_term(a.term_arg("rate")?)?,
        },
        "negbin" => {
            let psi = control_map_from_term(a.term_arg("psi")?)?;
            let q = a.real("q")?;
            if !(q > 0.0 && q < 1.0) {
                return Err(GrammarError::BadValue { term: t.name.clone(), key: "q".into(), value: q.to_string(), expected: "in (0, 1)" });
            }
            ControlSpec::NegBin { psi, q }
        }
        "scaled_bernoulli" => ControlSpec::ScaledBernoulli {
            scale: control_map_from_term(a.term_arg("scale")?)?,
            rate: rate_from_term(a.term_arg("rate")?)?,
        },
        other => return Err(GrammarError::UnknownName { kind: "control", name: other.into() }),
    };
    a.finish()?;
    Ok(c)
}

impl FromStr for ControlSpec {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        control_spec_from_term(&parse_term(s)?)
    }
}

// ---------------------------------------------------------------- offspring families

impl fmt::Display for OffspringFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffspringFamily::BinomialBevertonHolt { k } => write!(f, "binomial_bh(K={k})"),
            OffspringFamily::PoissonScaled { lambda } => write!(f, "poisson_scaled(lambda={lambda})"),
            OffspringFamily::PoissonRicker { r, k } => write!(f, "poisson_ricker(r={r},K={k})"),
            OffspringFamily::NbLogistic { lambda, m, k } => write!(f, "nb_logistic(lambda={lambda},M={m},K={k})"),
            OffspringFamily::NbShiftGated { lambda, m } => write!(f, "nb_shift_gated(lambda={lambda},M={m})"),
            OffspringFamily::ThreePoint => f.write_str("three_point"),
            OffspringFamily::Constant(d) => write!(f, "constant(law={d})"),
            OffspringFamily::Tabulated { entries, default } => {
                f.write_str("tabulated{")?;
                write_entries(f, entries)?;
                write!(f, "}}(default={default})")
            }
            OffspringFamily::DividedDcbp { map, offspring } => {
                write!(f, "divided_dcbp(phi={map},offspring={offspring})")
            }
            OffspringFamily::DividedControl { control, offspring } => {
                write!(f, "divided_control(control={control},offspring={offspring})")
            }
            OffspringFamily::MinVariance { map, mean, variance } => write!(
                f,
                "min_variance(phi={map},mean={},variance={})",
                rational::format(mean),
                rational::format(variance)
            ),
        }
    }
}

pub fn family_from_term(t: &Term) -> Result<OffspringFamily, GrammarError> {
    if t.name == "tabulated" {
        let mut entries = BTreeMap::new();
        for (k, v) in &t.entries {
            entries.insert(*k, distribution_from_term(entry_term(t, v)?)?);
        }
        let mut a = Args::new(t);
        let default = distribution_from_term(a.term_arg("default")?)?;
        a.finish()?;
        return Ok(OffspringFamily::Tabulated { entries, default });
    }
    no_entries(t)?;
    let mut a = Args::new(t);
    let fam = match t.name.as_str() {
        "binomial_bh" => OffspringFamily::BinomialBevertonHolt { k: positive(t, "K", a.real("K")?)? },
        "poisson_scaled" => OffspringFamily::PoissonScaled { lambda: positive(t, "lambda", a.real("lambda")?)? },
        "poisson_ricker" => OffspringFamily::PoissonRicker {
            r: positive(t, "r", a.real("r")?)?,
            k: positive(t, "K", a.real("K")?)?,
        },
        "nb_logistic" => OffspringFamily::NbLogistic {
            lambda: positive(t, "lambda", a.real("lambda")?)?,
            m: a.int("M")?,
            k: positive(t, "K", a.real("K")?)?,
        },
        "nb_shift_gated" => {
            let lambda = a.real("lambda")?;
            if !(lambda > 1.0 && lambda.is_finite()) {
                return Err(GrammarError::BadValue {
                    term: t.name.clone(),
                    key: "lambda".into(),
                    value: lambda.to_string(),
                    expected: "greater than 1",
                });
            }
            OffspringFamily::NbShiftGated { lambda, m: a.int("M")? }
        }
        "three_point" => OffspringFamily::ThreePoint,
        "constant" => OffspringFamily::Constant(distribution_from_term(a.term_arg("law")?)?),
        "divided_dcbp" => OffspringFamily::DividedDcbp {
            map: control_map_from_term(a.term_arg("phi")?)?,
            offspring: distribution_from_term(a.term_arg("offspring")?)?,
        },
        "divided_control" => OffspringFamily::DividedControl {
            control: control_spec_from_term(a.term_arg("control")?)?,
            offspring: distribution_from_term(a.term_arg("offspring")?)?,
        },
        "min_variance" => OffspringFamily::MinVariance {
            map: control_map_from_term(a.term_arg("phi")?)?,
            mean: a.rational("mean")?,
            variance: a.rational("variance")?,
        },
        other => return Err(GrammarError::UnknownName { kind: "offspring family", name: other.into() }),
    };
    a.finish()?;
    Ok(fam)
}

impl FromStr for OffspringFamily {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        family_from_term(&parse_term(s)?)
    }
}

// ---------------------------------------------------------------- process specs

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessSpec::Psdbp(family) => write!(f, "psdbp(family={family})"),
            ProcessSpec::Cbp { control, offspring } => write!(f, "cbp(control={control},offspring={offspring})"),
        }
    }
}

pub fn process_from_term(t: &Term) -> Result<ProcessSpec, GrammarError> {
    no_entries(t)?;
    let mut a = Args::new(t);
    let spec = match t.name.as_str() {
        "psdbp" => ProcessSpec::Psdbp(family_from_term(a.term_arg("family")?)?),
        "cbp" => ProcessSpec::Cbp {
            control: control_spec_from_term(a.term_arg("control")?)?,
            offspring: distribution_from_term(a.term_arg("offspring")?)?,
        },
        other => return Err(GrammarError::UnknownName { kind: "process", name: other.into() }),
    };
    a.finish()?;
    Ok(spec)
}

impl FromStr for ProcessSpec {
    type Err = GrammarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        process_from_term(&parse_term(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<T>(v: T)
    where
        T: fmt::Display + FromStr<Err = GrammarError> + PartialEq + fmt::Debug,
    {
        let text = v.to_string();
        let back: T = text.parse().unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(back, v, "{text}");
    }

    #[test]
    fn distributions_round_trip() {
        round_trip(Distribution::poisson(3.0).unwrap());
        round_trip(Distribution::negative_binomial(1.5, 0.25).unwrap());
        round_trip(Distribution::finite(vec![(0, 0.25), (2, 0.75)]).unwrap());
        round_trip(Distribution::zero_inflated_poisson(2.0 / 3.0, 3.0).unwrap());
        round_trip(Distribution::zero_inflated_geometric(0.3, 0.5).unwrap());
        round_trip(Distribution::scaled_bernoulli(4, 0.1).unwrap());
        round_trip(Distribution::point(7));
        round_trip(Distribution::binomial(2, 0.5).unwrap());
    }

    #[test]
    fn documented_forms_parse() {
        assert_eq!("poisson(mu=3.0)".parse::<Distribution>().unwrap(), Distribution::Poisson { mu: 3.0 });
        assert_eq!("nb(r=1.5,q=0.25)".parse::<Distribution>().unwrap(), Distribution::NegativeBinomial { r: 1.5, q: 0.25 });
        let f: Distribution = "finite{0:0.25, 2:0.75}".parse().unwrap();
        assert_eq!(f.pmf(2), 0.75);
        assert_eq!("bernoulli(p=1/4)".parse::<Distribution>().unwrap(), Distribution::Bernoulli { p: 0.25 });
    }

    #[test]
    fn specs_round_trip() {
        round_trip(ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Logistic { lambda: 3.0, m: 2, k: 100.0 } },
            Distribution::poisson(3.0).unwrap(),
        ));
        round_trip(ProcessSpec::psdbp(OffspringFamily::NbLogistic { lambda: 3.0, m: 2, k: 100.0 }));
        round_trip(ProcessSpec::dcbp(
            ControlMap::AffineFloor { a: rational::ratio(1, 2), b: rational::int(-1) },
            Distribution::point(2),
        ));
        let table = ControlMap::Table { entries: [(0, 1), (3, 9)].into_iter().collect(), default: Box::new(ControlMap::ParityHalf) };
        round_trip(table.clone());
        round_trip(OffspringFamily::MinVariance { map: table, mean: rational::ratio(1, 3), variance: rational::int(2) });
        round_trip(OffspringFamily::Tabulated {
            entries: [(1, Distribution::point(1))].into_iter().collect(),
            default: Distribution::poisson(2.0).unwrap(),
        });
        round_trip(ControlSpec::ScaledBernoulli {
            scale: ControlMap::AffineFloor { a: rational::int(1), b: rational::int(1) },
            rate: Rate::ExpGate { scale: 1000.0 },
        });
    }

    #[test]
    fn diagnostics() {
        let err = "poisson(mu=3".parse::<Distribution>().unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { .. }), "{err}");
        let err = "binomial(n=2,p=1.5)".parse::<Distribution>().unwrap_err();
        assert!(matches!(err, GrammarError::Invalid(_)));
        let err = "poisson(mu=3,nu=1)".parse::<Distribution>().unwrap_err();
        assert!(matches!(err, GrammarError::UnexpectedArgument { .. }));
        let err = "weibull(k=1)".parse::<Distribution>().unwrap_err();
        assert!(matches!(err, GrammarError::UnknownName { .. }));
    }
}
