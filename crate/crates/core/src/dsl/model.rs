//! Model files: `.scm`, `.bscm` and `.po`.
//!
//! ```text
//! scm
//! exogenous { UX {0 1} }
//! noise { (UX=0) = 1/2  (UX=1) = 1/2 }
//! endogenous { X {0 1} Y {0 1} }
//! equation X noise (UX) { (0) -> 0  (1) -> 1 }
//! equation Y given (X) { (0) -> 0  (1) -> 1 }
//! kernels { {CF.X} }
//! ```
//!
//! A `.bscm` file starts with `bscm` and adds
//! `coupling { (F.UX=0, CF.UX=1) = p ... }`, or `coupling shared` /
//! `coupling independent`. A `.po` file lists `units`, `endogenous`, one
//! `observed V { unit -> label }` per variable and any number of
//! `potential V do (X=x) { unit -> label }` blocks.

use std::str::FromStr;

use num_traits::One;

use super::lexer::{Cursor, Tok, Token};
use super::{parse_law, parse_number, parse_tuple, Grid};
use crate::compile::{
    compile_backtracking, compile_po, compile_scm, diagonal_coupling, product_coupling, Equation, PoModel,
    PotentialOutcome, ScmModel, Variable, COUNTERFACTUAL, FACTUAL,
};
use crate::error::{Error, Result};
use crate::mechanism::CausalSpace;
use crate::rational::{format_rational, Prob};
use crate::space::CoordSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Scm,
    Bscm,
    Po,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scm" => Ok(ModelKind::Scm),
            "bscm" => Ok(ModelKind::Bscm),
            "po" => Ok(ModelKind::Po),
            _ => Err(Error::Model(format!("unknown model kind `{s}`"))),
        }
    }
}

fn grid_of(vars: &[Variable], idx: &[usize], prefix: &str) -> Grid {
    Grid {
        names: idx.iter().map(|&i| format!("{prefix}{}", vars[i].name)).collect(),
        labels: idx.iter().map(|&i| vars[i].labels.clone()).collect(),
    }
}

fn parse_header(cur: &mut Cursor, kw: &str) -> Result<()> {
    cur.expect_keyword(kw).map(|_| ())
}

/// `{ NAME {labels} ... }`
fn parse_variables(cur: &mut Cursor) -> Result<Vec<Variable>> {
    cur.expect(&Tok::LBrace)?;
    let mut out: Vec<Variable> = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        let (name, t) = cur.word("a variable name")?;
        if out.iter().any(|v| v.name == name) {
            return Err(Cursor::semantic_at(&t, format!("variable {name} declared twice")));
        }
        let labels = parse_labels(cur)?;
        out.push(Variable::new(name, labels));
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

fn parse_labels(cur: &mut Cursor) -> Result<Vec<String>> {
    let open = cur.expect(&Tok::LBrace)?;
    let mut labels: Vec<String> = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        let (l, t) = cur.label()?;
        if labels.contains(&l) {
            return Err(Cursor::semantic_at(&t, format!("label {l} repeated")));
        }
        labels.push(l);
        cur.eat(&Tok::Comma);
    }
    if labels.is_empty() {
        return Err(Cursor::semantic_at(&open, "a variable needs at least one label"));
    }
    Ok(labels)
}

fn find_var(vars: &[Variable], name: &str, t: &Token) -> Result<usize> {
    vars.iter()
        .position(|v| v.name == name)
        .ok_or_else(|| Cursor::semantic_at(t, format!("unknown variable {name}")))
}

fn label_of(var: &Variable, label: &str, t: &Token) -> Result<usize> {
    var.labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Cursor::semantic_at(t, format!("unknown label {label} for {}", var.name)))
}

/// `(A, B)`: a list of variable names.
fn parse_name_list(cur: &mut Cursor, vars: &[Variable]) -> Result<Vec<usize>> {
    cur.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    while !cur.eat(&Tok::RParen) {
        let (name, t) = cur.word("a variable name")?;
        let v = find_var(vars, &name, &t)?;
        if out.contains(&v) {
            return Err(Cursor::semantic_at(&t, format!("{name} listed twice")));
        }
        out.push(v);
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

fn require<'v>(vars: &'v Option<Vec<Variable>>, what: &str, t: &Token) -> Result<&'v [Variable]> {
    vars.as_deref()
        .ok_or_else(|| Cursor::semantic_at(t, format!("`{what}` must be declared first")))
}

/// `equation Y given (X) noise (UY) { (tuple) -> label ... [default -> label] }`
fn parse_equation(cur: &mut Cursor, exo: &[Variable], endo: &[Variable]) -> Result<Equation> {
    let (name, t) = cur.word("a variable name")?;
    let target = find_var(endo, &name, &t)?;
    let parents = if cur.eat_keyword("given") { parse_name_list(cur, endo)? } else { Vec::new() };
    if parents.contains(&target) {
        return Err(Cursor::semantic_at(&t, format!("{name} depends on itself")));
    }
    let noise = if cur.eat_keyword("noise") { parse_name_list(cur, exo)? } else { Vec::new() };
    let mut grid = grid_of(endo, &parents, "");
    let noise_grid = grid_of(exo, &noise, "");
    grid.names.extend(noise_grid.names);
    grid.labels.extend(noise_grid.labels);
    let all: Vec<usize> = (0..grid.names.len()).collect();

    let open = cur.expect(&Tok::LBrace)?;
    let mut table: Vec<Option<usize>> = vec![None; grid.size()];
    let mut default = None;
    while !cur.eat(&Tok::RBrace) {
        if cur.is_keyword("default") {
            let dt = cur.bump();
            cur.expect(&Tok::Arrow)?;
            let (l, lt) = cur.label()?;
            if default.replace(label_of(&endo[target], &l, &lt)?).is_some() {
                return Err(Cursor::semantic_at(&dt, "default given twice"));
            }
        } else {
            let (values, at) = parse_tuple(cur, &grid, &all)?;
            if let Some(k) = values.iter().position(Option::is_none) {
                return Err(Cursor::semantic_at(&at, format!("row omits {}", grid.names[k])));
            }
            let row = grid.index(&values.into_iter().map(Option::unwrap).collect::<Vec<_>>());
            cur.expect(&Tok::Arrow)?;
            let (l, lt) = cur.label()?;
            if table[row].replace(label_of(&endo[target], &l, &lt)?).is_some() {
                return Err(Cursor::semantic_at(&at, "row listed twice"));
            }
        }
        cur.eat(&Tok::Comma);
    }
    let table = match default {
        Some(d) => table.into_iter().map(|v| v.unwrap_or(d)).collect(),
        None => {
            if let Some(row) = table.iter().position(Option::is_none) {
                let labels: Vec<String> =
                    grid.decode(row).iter().enumerate().map(|(k, &v)| format!("{}={}", grid.names[k], grid.labels[k][v])).collect();
                return Err(Cursor::semantic_at(
                    &open,
                    format!("equation for {name} has no row for ({}) and no default", labels.join(", ")),
                ));
            }
            table.into_iter().map(Option::unwrap).collect()
        }
    };
    Ok(Equation { target, parents, noise, table })
}

/// `{ {F.X} {F.X, CF.Y} }` against the two-world layout F then CF.
fn parse_kernel_list(cur: &mut Cursor, endo: &[Variable]) -> Result<Vec<CoordSet>> {
    cur.expect(&Tok::LBrace)?;
    let n = endo.len();
    let mut out = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        cur.expect(&Tok::LBrace)?;
        let mut set = Vec::new();
        while !cur.eat(&Tok::RBrace) {
            let (world, t) = cur.word("a coordinate `world.variable`")?;
            cur.expect(&Tok::Dot)?;
            let (name, _) = cur.label()?;
            let v = find_var(endo, &name, &t)?;
            let c = match world.as_str() {
                w if w == FACTUAL => v,
                w if w == COUNTERFACTUAL => n + v,
                _ => return Err(Cursor::semantic_at(&t, format!("unknown world {world}"))),
            };
            if set.contains(&c) {
                return Err(Cursor::semantic_at(&t, format!("{world}.{name} listed twice")));
            }
            set.push(c);
            cur.eat(&Tok::Comma);
        }
        out.push(CoordSet::new(set));
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

enum Coupling {
    Table(Vec<Prob>),
    Shared,
    Independent,
}

struct ScmParts {
    model: ScmModel,
    kernels: Option<Vec<CoordSet>>,
    coupling: Option<Coupling>,
}

fn parse_scm_body(cur: &mut Cursor, allow_coupling: bool) -> Result<ScmParts> {
    let mut exo: Option<Vec<Variable>> = None;
    let mut endo: Option<Vec<Variable>> = None;
    let mut noise = None;
    let mut equations: Vec<Equation> = Vec::new();
    let mut kernels = None;
    let mut coupling = None;
    let mut seen = std::collections::HashSet::new();
    while !cur.at_eof() {
        let (kw, t) = cur.word("a section")?;
        let once = |seen: &mut std::collections::HashSet<String>| {
            if seen.insert(kw.clone()) {
                Ok(())
            } else {
                Err(Cursor::semantic_at(&t, format!("`{kw}` given twice")))
            }
        };
        match kw.as_str() {
            "exogenous" => {
                once(&mut seen)?;
                exo = Some(parse_variables(cur)?);
            }
            "endogenous" => {
                once(&mut seen)?;
                endo = Some(parse_variables(cur)?);
            }
            "noise" => {
                once(&mut seen)?;
                let exo = require(&exo, "exogenous", &t)?;
                let all: Vec<usize> = (0..exo.len()).collect();
                noise = Some(parse_law(cur, &grid_of(exo, &all, ""), "noise law")?);
            }
            "equation" => {
                let e = exo.as_deref().unwrap_or(&[]);
                let v = require(&endo, "endogenous", &t)?;
                let eq = parse_equation(cur, e, v)?;
                if equations.iter().any(|x| x.target == eq.target) {
                    return Err(Cursor::semantic_at(&t, format!("second equation for {}", v[eq.target].name)));
                }
                equations.push(eq);
            }
            "kernels" => {
                once(&mut seen)?;
                kernels = Some(parse_kernel_list(cur, require(&endo, "endogenous", &t)?)?);
            }
            "coupling" if allow_coupling => {
                once(&mut seen)?;
                let exo = require(&exo, "exogenous", &t)?;
                coupling = Some(if cur.eat_keyword("shared") {
                    Coupling::Shared
                } else if cur.eat_keyword("independent") {
                    Coupling::Independent
                } else {
                    let all: Vec<usize> = (0..exo.len()).collect();
                    let mut grid = grid_of(exo, &all, &format!("{FACTUAL}."));
                    let cf = grid_of(exo, &all, &format!("{COUNTERFACTUAL}."));
                    grid.names.extend(cf.names);
                    grid.labels.extend(cf.labels);
                    Coupling::Table(parse_law(cur, &grid, "coupling")?)
                });
            }
            _ => return Err(Cursor::error_at(&t, format!("unknown section `{kw}`"))),
        }
    }
    let end = cur.peek().clone();
    let exogenous = exo.unwrap_or_default();
    let endogenous = endo.ok_or_else(|| Cursor::semantic_at(&end, "missing `endogenous` section"))?;
    let noise = match noise {
        Some(n) => n,
        None if exogenous.is_empty() => vec![Prob::one()],
        None => return Err(Cursor::semantic_at(&end, "missing `noise` section")),
    };
    if let Some(v) = (0..endogenous.len()).find(|&v| !equations.iter().any(|e| e.target == v)) {
        return Err(Cursor::semantic_at(&end, format!("no equation for {}", endogenous[v].name)));
    }
    Ok(ScmParts { model: ScmModel { exogenous, noise, endogenous, equations }, kernels, coupling })
}

/// An SCM and the kernel sets it lists, if any.
pub fn parse_scm(src: &str) -> Result<(ScmModel, Option<Vec<CoordSet>>)> {
    let mut cur = Cursor::new(src, true)?;
    parse_header(&mut cur, "scm")?;
    let p = parse_scm_body(&mut cur, false)?;
    Ok((p.model, p.kernels))
}

/// A backtracking SCM: one model for both worlds and the noise coupling.
pub fn parse_bscm(src: &str) -> Result<(ScmModel, Vec<Prob>)> {
    let mut cur = Cursor::new(src, true)?;
    parse_header(&mut cur, "bscm")?;
    let p = parse_scm_body(&mut cur, true)?;
    if p.kernels.is_some() {
        return Err(Error::Model("a backtracking model carries no kernels".into()));
    }
    let coupling = match p.coupling {
        None => return Err(Error::Model("missing `coupling` section".into())),
        Some(Coupling::Shared) => diagonal_coupling(&p.model.noise),
        Some(Coupling::Independent) => product_coupling(&p.model.noise, &p.model.noise),
        Some(Coupling::Table(t)) => t,
    };
    // Each world's noise marginal must match the noise law.
    let n = p.model.noise.len();
    for (world, side) in [(FACTUAL, true), (COUNTERFACTUAL, false)] {
        for u in 0..n {
            let m: Prob = (0..n).map(|v| &coupling[if side { u * n + v } else { v * n + u }]).sum();
            if m != p.model.noise[u] {
                return Err(Error::Model(format!(
                    "coupling's {world} marginal gives {} where the noise law has {}",
                    format_rational(&m),
                    format_rational(&p.model.noise[u])
                )));
            }
        }
    }
    Ok((p.model, coupling))
}

/// `{ unit -> label ... }` over the declared units.
fn parse_unit_map(cur: &mut Cursor, units: &[String], var: &Variable) -> Result<Vec<usize>> {
    let open = cur.expect(&Tok::LBrace)?;
    let mut out = vec![None; units.len()];
    while !cur.eat(&Tok::RBrace) {
        let (u, t) = cur.label()?;
        let i = units
            .iter()
            .position(|x| *x == u)
            .ok_or_else(|| Cursor::semantic_at(&t, format!("unknown unit {u}")))?;
        cur.expect(&Tok::Arrow)?;
        let (l, lt) = cur.label()?;
        if out[i].replace(label_of(var, &l, &lt)?).is_some() {
            return Err(Cursor::semantic_at(&t, format!("unit {u} listed twice")));
        }
        cur.eat(&Tok::Comma);
    }
    if let Some(i) = out.iter().position(Option::is_none) {
        return Err(Cursor::semantic_at(&open, format!("no value for unit {}", units[i])));
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

pub fn parse_po(src: &str) -> Result<PoModel> {
    let mut cur = Cursor::new(src, true)?;
    parse_header(&mut cur, "po")?;
    let mut units: Option<(Vec<String>, Vec<Prob>)> = None;
    let mut endo: Option<Vec<Variable>> = None;
    let mut observed: Vec<Option<Vec<usize>>> = Vec::new();
    let mut potentials = Vec::new();
    while !cur.at_eof() {
        let (kw, t) = cur.word("a section")?;
        match kw.as_str() {
            "units" => {
                if units.is_some() {
                    return Err(Cursor::semantic_at(&t, "`units` given twice"));
                }
                let open = cur.expect(&Tok::LBrace)?;
                let (mut names, mut probs) = (Vec::new(), Vec::new());
                while !cur.eat(&Tok::RBrace) {
                    let (u, ut) = cur.label()?;
                    if names.contains(&u) {
                        return Err(Cursor::semantic_at(&ut, format!("unit {u} declared twice")));
                    }
                    cur.expect(&Tok::Eq)?;
                    names.push(u);
                    probs.push(parse_number(&mut cur)?.0);
                    cur.eat(&Tok::Comma);
                }
                let total: Prob = probs.iter().sum();
                if !total.is_one() {
                    return Err(Cursor::semantic_at(&open, format!("unit law sums to {}", format_rational(&total))));
                }
                units = Some((names, probs));
            }
            "endogenous" => {
                if endo.is_some() {
                    return Err(Cursor::semantic_at(&t, "`endogenous` given twice"));
                }
                let vars = parse_variables(&mut cur)?;
                observed = vec![None; vars.len()];
                endo = Some(vars);
            }
            "observed" | "potential" => {
                let vars = require(&endo, "endogenous", &t)?;
                let (names, _) = units
                    .as_ref()
                    .ok_or_else(|| Cursor::semantic_at(&t, "`units` must be declared first"))?;
                let (name, nt) = cur.word("a variable name")?;
                let v = find_var(vars, &name, &nt)?;
                if kw == "observed" {
                    let m = parse_unit_map(&mut cur, names, &vars[v])?;
                    if observed[v].replace(m).is_some() {
                        return Err(Cursor::semantic_at(&nt, format!("{name} observed twice")));
                    }
                } else {
                    cur.expect_keyword("do")?;
                    cur.expect(&Tok::LParen)?;
                    let mut intervention = Vec::new();
                    while !cur.eat(&Tok::RParen) {
                        let (x, xt) = cur.word("a variable name")?;
                        let xv = find_var(vars, &x, &xt)?;
                        cur.expect(&Tok::Eq)?;
                        let (l, lt) = cur.label()?;
                        if intervention.iter().any(|&(y, _)| y == xv) {
                            return Err(Cursor::semantic_at(&xt, format!("{x} set twice")));
                        }
                        intervention.push((xv, label_of(&vars[xv], &l, &lt)?));
                        cur.eat(&Tok::Comma);
                    }
                    intervention.sort();
                    let values = parse_unit_map(&mut cur, names, &vars[v])?;
                    if potentials
                        .iter()
                        .any(|p: &PotentialOutcome| p.target == v && p.intervention == intervention)
                    {
                        return Err(Cursor::semantic_at(&nt, format!("potential outcome of {name} repeated")));
                    }
                    potentials.push(PotentialOutcome { target: v, intervention, values });
                }
            }
            _ => return Err(Cursor::error_at(&t, format!("unknown section `{kw}`"))),
        }
    }
    let end = cur.peek().clone();
    let (units, unit_prob) = units.ok_or_else(|| Cursor::semantic_at(&end, "missing `units` section"))?;
    let endogenous = endo.ok_or_else(|| Cursor::semantic_at(&end, "missing `endogenous` section"))?;
    let observed = observed
        .into_iter()
        .enumerate()
        .map(|(i, o)| {
            o.ok_or_else(|| Cursor::semantic_at(&end, format!("no `observed` block for {}", endogenous[i].name)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PoModel { units, unit_prob, endogenous, observed, potentials })
}

/// Parses and compiles a model file of the given kind.
pub fn compile_source(kind: ModelKind, src: &str) -> Result<CausalSpace> {
    match kind {
        ModelKind::Scm => {
            let (m, k) = parse_scm(src)?;
            compile_scm(&m, k.as_deref())
        }
        ModelKind::Bscm => {
            let (m, c) = parse_bscm(src)?;
            compile_backtracking(&m, &m, &c)
        }
        ModelKind::Po => compile_po(&parse_po(src)?),
    }
}
