//! Bundled example spaces and the expectation table that `repro` checks.

use crate::dsl::{compile_source, parse_query, parse_space, run, ModelKind, SpaceDocument};
use crate::error::{Error, Result};

pub struct Fixture {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
}

macro_rules! fixture {
    ($name:literal, $file:literal) => {
        Fixture { name: $name, file: $file, source: include_str!(concat!("../fixtures/", $file)) }
    };
}

/// Every bundled file, spaces first.
pub const FIXTURES: &[Fixture] = &[
    fixture!("exam", "exam.cfs"),
    fixture!("star", "star.cfs"),
    fixture!("disease", "disease.cfs"),
    fixture!("disease-asym", "disease-asym.cfs"),
    fixture!("dormant", "dormant.cfs"),
    fixture!("exam-cycle", "exam-cycle.cfs"),
    fixture!("chain", "chain.scm"),
    fixture!("chain-backtracking", "chain.bscm"),
    fixture!("toy", "toy.po"),
    fixture!("cyclic", "cyclic.scm"),
];

/// Names accepted by `repro`, besides `all`.
pub const SPACES: &[&str] = &["exam", "star", "disease", "disease-asym", "dormant", "exam-cycle"];

pub fn fixture(file: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.file == file || f.name == file)
}

/// Parses a bundled `.cfs` space by name.
pub fn load(name: &str) -> Result<SpaceDocument> {
    let f = FIXTURES
        .iter()
        .find(|f| f.name == name && f.file.ends_with(".cfs"))
        .ok_or_else(|| Error::Model(format!("no bundled space named {name}")))?;
    parse_space(f.source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    /// Stated in the worked example.
    Reference,
    /// Follows from the example's tables by a short computation.
    Derived,
    /// Forced by the definitions.
    Trivial,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::Reference => "reference",
            Tag::Derived => "derived",
            Tag::Trivial => "trivial",
        }
    }
}

pub enum Probe {
    /// Statements run against the space; the last one's result is checked.
    Query(&'static str),
    /// Compiling the named model file.
    Compile(&'static str),
}

pub struct Expectation {
    pub space: &'static str,
    pub probe: Probe,
    /// Leading part of the result text.
    pub expected: &'static str,
    pub tag: Tag,
}

const fn q(space: &'static str, script: &'static str, expected: &'static str, tag: Tag) -> Expectation {
    Expectation { space, probe: Probe::Query(script), expected, tag }
}

use Tag::*;

pub const EXPECTATIONS: &[Expectation] = &[
    q("exam", "PROB (CF.exam=P) GIVEN (F.class=Y & F.exam=P)", "38/43", Reference),
    q("exam", "PROB (CF.class=Y) GIVEN (F.class=Y)", "13/16", Reference),
    q("exam", "PROB (CF.exam=P) GIVEN (F.class=N & F.exam=F & CF.class=Y)", "1/5", Reference),
    q("exam", "PROB (CF.exam=P) GIVEN (F.class=N & F.exam=F)", "3/17", Reference),
    q("exam", "INTERVENE {CF.class} WITH point(CF.class=Y); PROB (CF.exam=P)", "16/25", Reference),
    q("exam", "INTERVENE {CF.class} WITH point(CF.class=N); PROB (CF.exam=P)", "3/5", Reference),
    q(
        "exam",
        "CONDITION (F.class=N & F.exam=F); INTERVENE {CF.class} WITH point(CF.class=Y); PROB (CF.exam=P)",
        "4/17",
        Reference,
    ),
    q("exam", "CONDITION (F.exam=P); INTERVENE {CF.class} WITH point(CF.class=N); PROB (CF.exam=P)", "26/31", Reference),
    q("exam", "PROB (CF.exam=P) GIVEN (F.exam=P)", "27/31", Reference),
    q("exam", "CONDITION (F.exam=P); INTERVENE {CF.class} WITH point(CF.class=Y); PROB (CF.exam=P)", "55/62", Reference),
    q(
        "exam",
        "CONDITION (F.class=Y & F.exam=P); INTERVENE {CF.class} WITH point(CF.class=Y); PROB (CF.exam=P)",
        "39/43",
        Reference,
    ),
    q(
        "exam",
        "CONDITION (F.class=N & F.exam=F); INTERVENE {CF.class} WITH point(CF.class=N); PROB (CF.exam=P)",
        "3/17",
        Reference,
    ),
    q("exam", "EFFECT {CF.class} ON (CF.exam=P)", "active", Reference),
    q(
        "exam",
        "EFFECT {CF.class} ON (CF.exam=P) GIVEN (F.class=N & F.exam=F)",
        "active: P_G = 3/17 (0.176471); do(CF.class=Y) 4/17 (0.235294); do(CF.class=N) 3/17",
        Reference,
    ),
    q("exam", "CHECK", "ok", Reference),
    q("exam", "SYMMETRIC", "true", Reference),
    q("star", "ASEQ (F.star=Y) (CF.star=Y)", "false; P(symmetric difference) = 19/50", Reference),
    q("star", "CONDITION (F.sky=C & CF.sky=C); SYNC {F.star} {CF.star}", "true", Reference),
    q("star", "CONDITION (F.sky=C & CF.sky=C); ASEQ (F.star=Y) (CF.star=Y)", "true", Derived),
    q("star", "PROB (F.star=Y)", "1/2", Reference),
    q("disease", "PROB (CF.status=S) GIVEN (F.status=S)", "89/90", Reference),
    q("disease", "PROB (CF.status=D) GIVEN (F.status=D)", "9/10", Reference),
    q("disease", "SYMMETRIC", "true", Reference),
    q("disease-asym", "PROB (CF.status=S) GIVEN (F.status=S)", "2/3", Reference),
    q("disease-asym", "PROB (CF.status=S)", "601/1000", Reference),
    q("disease-asym", "PROB (F.status=S)", "9/10", Reference),
    q("disease-asym", "SYMMETRIC", "false", Reference),
    q("dormant", "EFFECT {X.w2} ON (X.w3=0)", "active: K_{X.w2}(X.w2=0) = 1/4 (0.250000) vs P = 1/2", Reference),
    q(
        "dormant",
        "EFFECT {X.w1} ON (X.w3=0)",
        "dormant: K_{X.w1, X.w2}(X.w1=0, X.w2=0) = 1/8 (0.125000) vs K_{X.w2}(X.w2=0) = 1/4",
        Reference,
    ),
    q("dormant", "EFFECT {} ON (X.w3=0)", "no-effect", Trivial),
    q("dormant", "CHECK", "ok", Reference),
    q("exam-cycle", "CHECK", "ok", Reference),
    q("exam-cycle", "INTERVENE {CF.exam} WITH point(CF.exam=P); PROB (CF.class=Y)", "0", Reference),
    q("exam-cycle", "INTERVENE {CF.exam} WITH point(CF.exam=P); PROB (F.exam=P)", "31/50", Derived),
    Expectation { space: "exam-cycle", probe: Probe::Compile("cyclic.scm"), expected: "rejected", tag: Reference },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReproLine {
    pub space: &'static str,
    pub query: String,
    pub result: String,
    pub expected: &'static str,
    pub tag: Tag,
    pub pass: bool,
}

impl ReproLine {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{} {}: {} = {}  [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.space,
            self.query,
            self.result,
            self.tag.as_str()
        );
        if !self.pass {
            s += &format!(" expected {}", self.expected);
        }
        s
    }
}

fn matches(result: &str, expected: &str) -> bool {
    result == expected
        || result
            .strip_prefix(expected)
            .is_some_and(|rest| rest.starts_with(' ') || rest.starts_with(';') || rest.starts_with(':'))
}

fn evaluate(e: &Expectation) -> Result<(String, String)> {
    match e.probe {
        Probe::Compile(file) => {
            let f = fixture(file).ok_or_else(|| Error::Model(format!("no bundled model {file}")))?;
            let result = match compile_source(ModelKind::Scm, f.source) {
                Ok(_) => "compiled".to_string(),
                Err(err) => format!("rejected: {err}"),
            };
            Ok((format!("compile scm {file}"), result))
        }
        Probe::Query(script) => {
            let doc = load(e.space)?;
            let parsed = parse_query(script)?;
            let mirror = doc.world_mirror()?;
            let out = run(&doc.space, &parsed, mirror.as_ref());
            if let Some(err) = out.error {
                return Ok((script.to_string(), format!("error: {err}")));
            }
            let last = parsed.statements.last().map(|s| s.text.clone()).unwrap_or_default();
            let prefix = format!("{last} = ");
            let result = out
                .lines
                .iter()
                .rev()
                .find_map(|l| l.strip_prefix(&prefix))
                .unwrap_or("no result")
                .to_string();
            Ok((script.to_string(), result))
        }
    }
}

/// Recomputes the expectations for one space, or all of them for `all`.
pub fn reproduce(name: &str) -> Result<Vec<ReproLine>> {
    if name != "all" && !SPACES.contains(&name) {
        return Err(Error::Model(format!("unknown example {name}; expected one of {} or all", SPACES.join(", "))));
    }
    EXPECTATIONS
        .iter()
        .filter(|e| name == "all" || e.space == name)
        .map(|e| {
            let (query, result) = evaluate(e)?;
            Ok(ReproLine { space: e.space, pass: matches(&result, e.expected), query, result, expected: e.expected, tag: e.tag })
        })
        .collect()
}
