//! The `.cfq` query language.
//!
//! Statements are separated by newlines or `;` and run in order against an
//! ambient space; `CONDITION` and `INTERVENE` replace that space for the
//! statements that follow.
//!
//! ```text
//! LET nf = EVENT(F.class=N & F.exam=F)
//! CONDITION nf
//! INTERVENE {CF.class} WITH point(CF.class=Y)
//! PROB (CF.exam=P)
//! ```
//!
//! Events: `C.x=L`, `C.x!=L`, `C.x in {L M}`, bound names, `()` for Ω,
//! combined with `!`, `&` and `|`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::lexer::{Cursor, Tok, Token};
use super::{parse_number, squash, Grid};
use crate::counterfactual::WorldMirror;
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::mechanism::{CausalSpace, ConditionalKind, EffectKind, EffectVerdict, KernelCheck};
use crate::rational::{format_rational, render, Prob};
use crate::space::{CoordSet, Event, SpaceSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    fn of(t: &Token) -> Pos {
        Pos { line: t.line, col: t.col }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Semantic { line: self.line, col: self.col, msg: msg.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomOp {
    Eq,
    Ne,
    In,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    All,
    Atom { coord: String, op: AtomOp, labels: Vec<String>, at: Pos },
    Name(String, Pos),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordRef {
    pub name: String,
    pub at: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Event(Expr),
    Sigma(Vec<CoordRef>),
}

/// `(coordinate, label)` assignments.
pub type Assignment = Vec<(CoordRef, String)>;

#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Point(Assignment, Pos),
    Uniform,
    Table { entries: Vec<(Assignment, Prob, Pos)>, default: Option<Prob>, at: Pos },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let { name: String, expr: Expr },
    Condition(Expr),
    Intervene { coords: Vec<CoordRef>, dist: Dist },
    Prob { event: Expr, given: Option<Expr> },
    Effect { coords: Vec<CoordRef>, on: Expr, given: Option<Expr> },
    Indep { a: Operand, b: Operand, given: Option<Expr> },
    Sync { a: Vec<CoordRef>, b: Vec<CoordRef> },
    Aseq { a: Expr, b: Expr },
    Source { coords: Vec<CoordRef>, target: Option<Operand> },
    CausalIndep { coords: Vec<CoordRef>, a: Operand, b: Operand },
    CausalEqual { coords: Vec<CoordRef>, a: Expr, b: Expr },
    CausalSync { coords: Vec<CoordRef>, a: Vec<CoordRef>, b: Vec<CoordRef> },
    Symmetric,
    Check,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub stmt: Stmt,
    /// Source text of the statement on one line.
    pub text: String,
    pub at: Pos,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryScript {
    pub statements: Vec<Statement>,
}

const RESERVED: &[&str] = &[
    "LET", "EVENT", "CONDITION", "INTERVENE", "WITH", "PROB", "GIVEN", "EFFECT", "ON", "INDEP", "SYNC", "ASEQ",
    "SOURCE", "CINDEP", "CEQUAL", "CSYNC", "SYMMETRIC", "CHECK", "IN",
];

fn is_reserved(w: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(w))
}

fn parse_coord_list(cur: &mut Cursor) -> Result<Vec<CoordRef>> {
    cur.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        let (name, t) = cur.qualified()?;
        out.push(CoordRef { name, at: Pos::of(&t) });
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

fn parse_expr(cur: &mut Cursor) -> Result<Expr> {
    let mut left = parse_and(cur)?;
    while cur.eat(&Tok::Pipe) {
        left = Expr::Or(Box::new(left), Box::new(parse_and(cur)?));
    }
    Ok(left)
}

fn parse_and(cur: &mut Cursor) -> Result<Expr> {
    let mut left = parse_unary(cur)?;
    while cur.eat(&Tok::Amp) {
        left = Expr::And(Box::new(left), Box::new(parse_unary(cur)?));
    }
    Ok(left)
}

fn parse_unary(cur: &mut Cursor) -> Result<Expr> {
    if cur.eat(&Tok::Bang) {
        return Ok(Expr::Not(Box::new(parse_unary(cur)?)));
    }
    match cur.peek_tok().clone() {
        Tok::LParen => {
            cur.bump();
            if cur.eat(&Tok::RParen) {
                return Ok(Expr::All);
            }
            // Newlines are insignificant inside parentheses.
            let saved = cur.skip_newlines;
            cur.skip_newlines = true;
            let e = parse_expr(cur);
            let close = e.and_then(|e| cur.expect(&Tok::RParen).map(|_| e));
            cur.skip_newlines = saved;
            close
        }
        Tok::Word(w) if *cur.peek2() == Tok::Dot => {
            let _ = w;
            let (coord, t) = cur.qualified()?;
            let at = Pos::of(&t);
            if cur.eat(&Tok::Eq) {
                Ok(Expr::Atom { coord, op: AtomOp::Eq, labels: vec![cur.label()?.0], at })
            } else if cur.eat(&Tok::NotEq) {
                Ok(Expr::Atom { coord, op: AtomOp::Ne, labels: vec![cur.label()?.0], at })
            } else if cur.eat_keyword("in") {
                cur.expect(&Tok::LBrace)?;
                let mut labels = Vec::new();
                while !cur.eat(&Tok::RBrace) {
                    labels.push(cur.label()?.0);
                    cur.eat(&Tok::Comma);
                }
                Ok(Expr::Atom { coord, op: AtomOp::In, labels, at })
            } else {
                Err(cur.unexpected("`=`, `!=` or `in`"))
            }
        }
        Tok::Word(w) if !is_reserved(&w) => {
            let t = cur.bump();
            Ok(Expr::Name(w, Pos::of(&t)))
        }
        _ => Err(cur.unexpected("an event")),
    }
}

fn parse_operand(cur: &mut Cursor) -> Result<Operand> {
    if *cur.peek_tok() == Tok::LBrace {
        Ok(Operand::Sigma(parse_coord_list(cur)?))
    } else {
        Ok(Operand::Event(parse_expr(cur)?))
    }
}

fn parse_assignment(cur: &mut Cursor) -> Result<Assignment> {
    cur.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    while !cur.eat(&Tok::RParen) {
        let (name, t) = cur.qualified()?;
        cur.expect(&Tok::Eq)?;
        let (label, _) = cur.label()?;
        out.push((CoordRef { name, at: Pos::of(&t) }, label));
        cur.eat(&Tok::Comma);
    }
    Ok(out)
}

fn parse_dist(cur: &mut Cursor) -> Result<Dist> {
    if cur.is_keyword("point") {
        let t = cur.bump();
        return Ok(Dist::Point(parse_assignment(cur)?, Pos::of(&t)));
    }
    if cur.eat_keyword("uniform") {
        return Ok(Dist::Uniform);
    }
    let open = cur.expect(&Tok::LBrace)?;
    let saved = cur.skip_newlines;
    cur.skip_newlines = true;
    let mut entries = Vec::new();
    let mut default = None;
    let result = (|| {
        while !cur.eat(&Tok::RBrace) {
            if cur.eat_keyword("default") {
                cur.expect(&Tok::Eq)?;
                default = Some(parse_number(cur)?.0);
            } else {
                let at = Pos::of(cur.peek());
                let a = parse_assignment(cur)?;
                cur.expect(&Tok::Eq)?;
                entries.push((a, parse_number(cur)?.0, at));
            }
            cur.eat(&Tok::Comma);
        }
        Ok(())
    })();
    cur.skip_newlines = saved;
    result?;
    Ok(Dist::Table { entries, default, at: Pos::of(&open) })
}

fn parse_given(cur: &mut Cursor) -> Result<Option<Expr>> {
    if cur.eat_keyword("given") {
        Ok(Some(parse_expr(cur)?))
    } else {
        Ok(None)
    }
}

fn parse_statement(cur: &mut Cursor) -> Result<Stmt> {
    let (kw, t) = cur.word("a statement")?;
    let stmt = match kw.to_ascii_uppercase().as_str() {
        "LET" => {
            let (name, nt) = cur.word("a name")?;
            if is_reserved(&name) {
                return Err(Cursor::error_at(&nt, format!("`{name}` is reserved")));
            }
            cur.expect(&Tok::Eq)?;
            let expr = if cur.is_keyword("event") && *cur.peek2() == Tok::LParen {
                cur.bump();
                cur.expect(&Tok::LParen)?;
                let saved = cur.skip_newlines;
                cur.skip_newlines = true;
                let e = parse_expr(cur).and_then(|e| cur.expect(&Tok::RParen).map(|_| e));
                cur.skip_newlines = saved;
                e?
            } else {
                parse_expr(cur)?
            };
            Stmt::Let { name, expr }
        }
        "CONDITION" => Stmt::Condition(parse_expr(cur)?),
        "INTERVENE" => {
            let coords = parse_coord_list(cur)?;
            cur.expect_keyword("with")?;
            Stmt::Intervene { coords, dist: parse_dist(cur)? }
        }
        "PROB" => Stmt::Prob { event: parse_expr(cur)?, given: parse_given(cur)? },
        "EFFECT" => {
            let coords = parse_coord_list(cur)?;
            cur.expect_keyword("on")?;
            Stmt::Effect { coords, on: parse_expr(cur)?, given: parse_given(cur)? }
        }
        "INDEP" => Stmt::Indep { a: parse_operand(cur)?, b: parse_operand(cur)?, given: parse_given(cur)? },
        "SYNC" => Stmt::Sync { a: parse_coord_list(cur)?, b: parse_coord_list(cur)? },
        "ASEQ" => Stmt::Aseq { a: parse_expr(cur)?, b: parse_expr(cur)? },
        "SOURCE" => {
            let coords = parse_coord_list(cur)?;
            let target = if cur.eat_keyword("on") { Some(parse_operand(cur)?) } else { None };
            Stmt::Source { coords, target }
        }
        "CINDEP" => Stmt::CausalIndep { coords: parse_coord_list(cur)?, a: parse_operand(cur)?, b: parse_operand(cur)? },
        "CEQUAL" => Stmt::CausalEqual { coords: parse_coord_list(cur)?, a: parse_expr(cur)?, b: parse_expr(cur)? },
        "CSYNC" => Stmt::CausalSync {
            coords: parse_coord_list(cur)?,
            a: parse_coord_list(cur)?,
            b: parse_coord_list(cur)?,
        },
        "SYMMETRIC" => Stmt::Symmetric,
        "CHECK" => Stmt::Check,
        _ => return Err(Cursor::error_at(&t, format!("unknown statement `{kw}`"))),
    };
    Ok(stmt)
}

pub fn parse_query(src: &str) -> Result<QueryScript> {
    let mut cur = Cursor::new(src, false)?;
    let mut statements = Vec::new();
    loop {
        while cur.eat(&Tok::Newline) || cur.eat(&Tok::Semi) {}
        if cur.at_eof() {
            break;
        }
        let first = cur.peek().clone();
        let stmt = parse_statement(&mut cur)?;
        let text = squash(&src[first.start..cur.last_end()]);
        match cur.peek_tok() {
            Tok::Newline | Tok::Semi | Tok::Eof => {}
            _ => return Err(cur.unexpected("end of statement")),
        }
        statements.push(Statement { stmt, text, at: Pos::of(&first) });
    }
    Ok(QueryScript { statements })
}

/// Transcript lines and the process status. On error the transcript holds
/// the lines produced before the failing statement.
#[derive(Debug)]
pub struct RunOutcome {
    pub lines: Vec<String>,
    pub status: i32,
    pub error: Option<Error>,
}

struct Runner<'a> {
    space: CausalSpace,
    names: HashMap<String, Event>,
    mirror: Option<&'a WorldMirror>,
    violations: bool,
}

impl Runner<'_> {
    fn schema(&self) -> Arc<SpaceSchema> {
        self.space.schema().clone()
    }

    fn coord(&self, r: &CoordRef) -> Result<usize> {
        self.space
            .schema()
            .find_qualified(&r.name)
            .ok_or_else(|| r.at.error(format!("unknown coordinate {}", r.name)))
    }

    fn coords(&self, refs: &[CoordRef]) -> Result<CoordSet> {
        let mut out = Vec::new();
        for r in refs {
            let c = self.coord(r)?;
            if out.contains(&c) {
                return Err(r.at.error(format!("{} listed twice", r.name)));
            }
            out.push(c);
        }
        Ok(CoordSet::new(out))
    }

    fn label(&self, c: usize, label: &str, at: Pos) -> Result<usize> {
        let coord = self.space.schema().coord(c);
        coord
            .label_index(label)
            .ok_or_else(|| at.error(format!("unknown label {label} for {}", coord.qualified())))
    }

    fn event(&self, e: &Expr) -> Result<Event> {
        let schema = self.space.schema();
        Ok(match e {
            Expr::All => Event::full(schema.size()),
            Expr::Atom { coord, op, labels, at } => {
                let c = schema
                    .find_qualified(coord)
                    .ok_or_else(|| at.error(format!("unknown coordinate {coord}")))?;
                let mut wanted = vec![false; schema.coord(c).arity()];
                for l in labels {
                    wanted[self.label(c, l, *at)?] = true;
                }
                let keep = |w: usize| wanted[schema.value(w, c)];
                match op {
                    AtomOp::Ne => Event::from_predicate(schema.size(), |w| !keep(w)),
                    AtomOp::Eq | AtomOp::In => Event::from_predicate(schema.size(), keep),
                }
            }
            Expr::Name(n, at) => self.names.get(n).cloned().ok_or_else(|| at.error(format!("unknown event {n}")))?,
            Expr::Not(a) => self.event(a)?.complement(),
            Expr::And(a, b) => self.event(a)?.intersection(&self.event(b)?),
            Expr::Or(a, b) => self.event(a)?.union(&self.event(b)?),
        })
    }

    fn dist(&self, u: &CoordSet, d: &Dist) -> Result<Measure> {
        let sub = Arc::new(self.space.schema().sub_schema(u));
        let grid = Grid::from_schema(&sub);
        let resolve = |a: &Assignment, at: Pos| -> Result<usize> {
            let mut values = vec![None; u.len()];
            for (r, l) in a {
                let c = self.coord(r)?;
                let k = u.position(c).ok_or_else(|| r.at.error(format!("{} is not intervened on", r.name)))?;
                if values[k].replace(self.label(c, l, r.at)?).is_some() {
                    return Err(r.at.error(format!("{} assigned twice", r.name)));
                }
            }
            if let Some(k) = values.iter().position(Option::is_none) {
                return Err(at.error(format!("no value for {}", grid.names[k])));
            }
            Ok(grid.index(&values.into_iter().map(Option::unwrap).collect::<Vec<_>>()))
        };
        match d {
            Dist::Uniform => Ok(Measure::uniform(sub)),
            Dist::Point(a, at) => Ok(Measure::dirac(sub.clone(), resolve(a, *at)?)),
            Dist::Table { entries, default, at } => {
                let mut w: Vec<Option<Prob>> = vec![None; sub.size()];
                for (a, p, pos) in entries {
                    if w[resolve(a, *pos)?].replace(p.clone()).is_some() {
                        return Err(pos.error("value listed twice"));
                    }
                }
                let w: Vec<Prob> = match default {
                    Some(d) => w.into_iter().map(|x| x.unwrap_or_else(|| d.clone())).collect(),
                    None if w.iter().any(Option::is_none) => {
                        return Err(at.error("intervention law leaves values unlisted and has no default"))
                    }
                    None => w.into_iter().map(Option::unwrap).collect(),
                };
                let total: Prob = w.iter().sum();
                if !total.is_one() {
                    return Err(at.error(format!("intervention law sums to {}", format_rational(&total))));
                }
                Measure::new(sub, w)
            }
        }
    }

    fn check_line(c: &KernelCheck, schema: &SpaceSchema, u: &CoordSet) -> String {
        match c {
            KernelCheck::Holds => "true".into(),
            KernelCheck::Fails { given } => format!("false at {}", schema.format_partial(u, *given)),
            KernelCheck::Undetermined { missing } => format!(
                "undetermined: {} entries of K_{} missing",
                missing.len(),
                schema.format_coordset(u)
            ),
        }
    }

    fn effect_line(&self, v: &EffectVerdict) -> String {
        let schema = self.space.schema();
        match (&v.kind, &v.witness) {
            (EffectKind::NoEffect, _) => "no-effect".into(),
            (EffectKind::Active | EffectKind::Dormant, Some(w)) => {
                let proj_s = schema.projector(&w.on);
                let proj_r = schema.projector(&w.against_on);
                let r = proj_r.encode_with(|c| proj_s.label_in(w.given, c));
                let against = if w.against_on.is_empty() && v.kind == EffectKind::Active {
                    format!("P = {}", render(&w.against))
                } else {
                    format!(
                        "K_{}{} = {}",
                        schema.format_coordset(&w.against_on),
                        schema.format_partial(&w.against_on, r),
                        render(&w.against)
                    )
                };
                format!(
                    "{}: K_{}{} = {} vs {}",
                    v.kind,
                    schema.format_coordset(&w.on),
                    schema.format_partial(&w.on, w.given),
                    render(&w.value),
                    against
                )
            }
            _ => {
                let shown: Vec<String> = v.missing.iter().take(3).map(|k| format!("K_{}", schema.format_coordset(k))).collect();
                format!(
                    "undetermined: {} pairs unchecked, missing {}{}; present pairs {}",
                    v.unchecked_pairs,
                    shown.join(", "),
                    if v.missing.len() > 3 { ", ..." } else { "" },
                    if v.present_pairs_consistent { "consistent" } else { "inconsistent" }
                )
            }
        }
    }

    fn exec(&mut self, st: &Statement, out: &mut Vec<String>) -> Result<()> {
        let head = &st.text;
        match &st.stmt {
            Stmt::Let { name, expr } => {
                let e = self.event(expr)?;
                self.names.insert(name.clone(), e);
            }
            Stmt::Condition(g) => {
                let g = self.event(g)?;
                let pg = self.space.prob().prob(&g)?;
                if pg.is_zero() {
                    return Err(Error::ConditioningUndefined(format!("`{}`", head)));
                }
                self.space = self.space.condition(&g)?;
                out.push(format!("{head}: P = {}", render(&pg)));
            }
            Stmt::Intervene { coords, dist } => {
                let u = self.coords(coords)?;
                let q = self.dist(&u, dist)?;
                let r = self.space.intervene(&u, &q)?;
                out.push(format!("{head}: {} kernels derived, {} dropped", r.derived.len(), r.dropped.len()));
                self.space = r.space;
            }
            Stmt::Prob { event, given } => {
                let a = self.event(event)?;
                let p = match given {
                    None => self.space.prob().prob(&a)?,
                    Some(g) => {
                        let g = self.event(g)?;
                        self.space.prob().conditional(&a, &g).map_err(|e| match e {
                            Error::ConditioningUndefined(_) => Error::ConditioningUndefined(format!("`{head}`")),
                            e => e,
                        })?
                    }
                };
                out.push(format!("{head} = {}", render(&p)));
            }
            Stmt::Effect { coords, on, given: None } => {
                let u = self.coords(coords)?;
                let v = self.space.classify_effect(&u, &self.event(on)?)?;
                out.push(format!("{head} = {}", self.effect_line(&v)));
            }
            Stmt::Effect { coords, on, given: Some(g) } => {
                let u = self.coords(coords)?;
                let r = self.space.conditional_active_effect(&u, &self.event(on)?, &self.event(g)?)?;
                let schema = self.schema();
                let kind = match r.kind {
                    ConditionalKind::Active => "active",
                    ConditionalKind::NoActiveEffect => "no-active-effect",
                    ConditionalKind::Undetermined => "undetermined",
                };
                let mut parts = vec![format!("{kind}: P_G = {}", render(&r.observational))];
                for (i, v) in r.values.iter().enumerate() {
                    let what = match v {
                        Some(v) => render(v),
                        None if r.missing.contains(&i) => "absent".into(),
                        None => "undefined".into(),
                    };
                    parts.push(format!("do{} {}", schema.format_partial(&u, i), what));
                }
                out.push(format!("{head} = {}", parts.join("; ")));
            }
            Stmt::Indep { a, b, given } => {
                let p = match given {
                    None => self.space.prob().clone(),
                    Some(g) => self.space.prob().condition_event(&self.event(g)?).map_err(|_| {
                        Error::ConditioningUndefined(format!("`{head}`"))
                    })?,
                };
                let v = match (a, b) {
                    (Operand::Event(a), Operand::Event(b)) => p.independent(&self.event(a)?, &self.event(b)?)?,
                    (Operand::Sigma(a), Operand::Sigma(b)) => p.independent_sigmas(&self.coords(a)?, &self.coords(b)?)?,
                    _ => return Err(st.at.error("INDEP needs two events or two coordinate sets")),
                };
                out.push(format!("{head} = {v}"));
            }
            Stmt::Sync { a, b } => {
                let v = self.space.prob().synchronized(&self.coords(a)?, &self.coords(b)?)?;
                out.push(format!("{head} = {v}"));
            }
            Stmt::Aseq { a, b } => {
                let (a, b) = (self.event(a)?, self.event(b)?);
                let d = self.space.prob().prob(&a.symmetric_difference(&b))?;
                out.push(format!("{head} = {}; P(symmetric difference) = {}", d.is_zero(), render(&d)));
            }
            Stmt::Source { coords, target } => {
                let u = self.coords(coords)?;
                let c = match target {
                    None => self.space.is_global_source(&u)?,
                    Some(Operand::Event(e)) => self.space.is_source_of_event(&u, &self.event(e)?)?,
                    Some(Operand::Sigma(s)) => self.space.is_source_of(&u, &self.coords(s)?)?,
                };
                out.push(format!("{head} = {}", Self::check_line(&c, &self.schema(), &u)));
            }
            Stmt::CausalIndep { coords, a, b } => {
                let u = self.coords(coords)?;
                let c = match (a, b) {
                    (Operand::Event(a), Operand::Event(b)) => {
                        self.space.causal_independent(&u, &self.event(a)?, &self.event(b)?)?
                    }
                    (Operand::Sigma(a), Operand::Sigma(b)) => {
                        self.space.causal_independent_sigmas(&u, &self.coords(a)?, &self.coords(b)?)?
                    }
                    _ => return Err(st.at.error("CINDEP needs two events or two coordinate sets")),
                };
                out.push(format!("{head} = {}", Self::check_line(&c, &self.schema(), &u)));
            }
            Stmt::CausalEqual { coords, a, b } => {
                let u = self.coords(coords)?;
                let c = self.space.causally_equal(&u, &self.event(a)?, &self.event(b)?)?;
                out.push(format!("{head} = {}", Self::check_line(&c, &self.schema(), &u)));
            }
            Stmt::CausalSync { coords, a, b } => {
                let u = self.coords(coords)?;
                let c = self.space.causally_synchronized(&u, &self.coords(a)?, &self.coords(b)?)?;
                out.push(format!("{head} = {}", Self::check_line(&c, &self.schema(), &u)));
            }
            Stmt::Symmetric => {
                let m = self.mirror.ok_or_else(|| st.at.error("the space declares no mirrored worlds"))?;
                let r = self.space.is_symmetric(m)?;
                let schema = self.schema();
                let mut line = format!("{head} = {}", r.is_symmetric());
                if let Some((w, a, b)) = &r.measure {
                    line += &format!(
                        "; P{} = {} vs P{} = {}",
                        schema.format_outcome(*w),
                        format_rational(a),
                        schema.format_outcome(m.outcome(&schema, *w)),
                        format_rational(b)
                    );
                }
                if !r.kernel_failures.is_empty() {
                    line += &format!("; kernel entries differing: {}", r.kernel_failures.len());
                }
                if !r.uncheckable.is_empty() {
                    line += &format!("; {} kernels uncheckable", r.uncheckable.len());
                }
                out.push(line);
            }
            Stmt::Check => {
                let r = self.space.check_all();
                if r.is_clean() {
                    out.push(format!("{head} = ok"));
                } else {
                    self.violations = true;
                    out.push(format!("{head} = {} violations", r.violations.len()));
                }
                out.extend(r.describe(&self.schema()).into_iter().map(|l| format!("  {l}")));
            }
        }
        Ok(())
    }
}

/// Runs a script. Exit status: 0, 1 if a `CHECK` found violations, or the
/// error's code when a statement fails.
pub fn run(space: &CausalSpace, script: &QueryScript, mirror: Option<&WorldMirror>) -> RunOutcome {
    let mut runner = Runner { space: space.clone(), names: HashMap::new(), mirror, violations: false };
    let mut lines = Vec::new();
    for st in &script.statements {
        if let Err(e) = runner.exec(st, &mut lines) {
            let status = e.exit_code();
            return RunOutcome { lines, status, error: Some(e) };
        }
    }
    RunOutcome { lines, status: if runner.violations { 1 } else { 0 }, error: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfactual::tests::exam_space;

    fn run_text(src: &str) -> RunOutcome {
        run(&exam_space(), &parse_query(src).unwrap(), None)
    }

    #[test]
    fn conditional_intervention_transcript() {
        let out = run_text("CONDITION (F.class=N & F.exam=F); INTERVENE {CF.class} WITH point(CF.class=Y); PROB (CF.exam=P)");
        assert_eq!(out.status, 0, "{:?}", out.error);
        assert_eq!(out.lines.last().unwrap(), "PROB (CF.exam=P) = 4/17 (0.235294)");
        assert_eq!(out.lines[0], "CONDITION (F.class=N & F.exam=F): P = 17/100 (0.170000)");
    }

    #[test]
    fn prob_of_everything() {
        assert_eq!(run_text("PROB ()").lines, vec!["PROB () = 1 (1.000000)"]);
    }

    #[test]
    fn names_and_operators() {
        let out = run_text(
            "LET yp = EVENT(F.class=Y & F.exam=P)\nLET pass = CF.exam in {P}\nPROB pass GIVEN yp\nPROB !(CF.exam!=P) | (F.class=Y & !F.class=Y)",
        );
        assert_eq!(out.lines, vec!["PROB pass GIVEN yp = 38/43 (0.883721)", "PROB !(CF.exam!=P) | (F.class=Y & !F.class=Y) = 31/50 (0.620000)"]);
    }

    #[test]
    fn effects() {
        let out = run_text(
            "EFFECT {CF.class} ON (CF.exam=P)\nEFFECT {CF.class} ON (CF.exam=P) GIVEN (F.class=N & F.exam=F)\nEFFECT {F.exam} ON (CF.exam=P)",
        );
        assert_eq!(out.lines[0], "EFFECT {CF.class} ON (CF.exam=P) = active: K_{CF.class}(CF.class=Y) = 16/25 (0.640000) vs P = 31/50 (0.620000)");
        assert_eq!(
            out.lines[1],
            "EFFECT {CF.class} ON (CF.exam=P) GIVEN (F.class=N & F.exam=F) = active: P_G = 3/17 (0.176471); do(CF.class=Y) 4/17 (0.235294); do(CF.class=N) 3/17 (0.176471)"
        );
        assert!(out.lines[2].starts_with("EFFECT {F.exam} ON (CF.exam=P) = undetermined:"), "{}", out.lines[2]);
    }

    #[test]
    fn exit_codes() {
        let out = run_text("PROB ()\nCONDITION (F.class=Y & F.class=N)\nPROB ()");
        assert_eq!((out.status, out.lines.len()), (3, 1));
        let out = run_text("INTERVENE {F.exam} WITH uniform");
        assert_eq!(out.status, 4);
        let out = run_text("PROB (F.nope=1)");
        assert_eq!(out.status, 2);
        assert_eq!(out.error.unwrap(), Error::Semantic { line: 1, col: 7, msg: "unknown coordinate F.nope".into() });
        assert_eq!(run_text("CHECK").lines, vec!["CHECK = ok"]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_query("PROB (F.class=Y"), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("FROB ()"), Err(Error::Parse { line: 1, col: 1, .. })));
        assert!(matches!(parse_query("PROB () ()"), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("LET GIVEN = ()"), Err(Error::Parse { .. })));
    }

    #[test]
    fn sigma_statements_and_tables() {
        let out = run_text(
            "INDEP {F.class} {CF.class}\nSYNC {F.class} {F.class}\nASEQ (F.exam=P) (CF.exam=P)\nSOURCE {}\nINTERVENE {CF.class} WITH {\n  (CF.class=Y) = 1/2\n  default = 1/2\n}\nPROB (CF.exam=P)\nCINDEP {CF.class} (F.exam=P) (CF.exam=P)",
        );
        assert_eq!(out.status, 0, "{:?}", out.error);
        assert_eq!(out.lines[0], "INDEP {F.class} {CF.class} = false");
        assert_eq!(out.lines[1], "SYNC {F.class} {F.class} = true");
        assert_eq!(out.lines[2], "ASEQ (F.exam=P) (CF.exam=P) = false; P(symmetric difference) = 4/25 (0.160000)");
        assert_eq!(out.lines[3], "SOURCE {} = true");
        assert_eq!(out.lines[5], "PROB (CF.exam=P) = 31/50 (0.620000)");
        assert!(out.lines[6].starts_with("CINDEP {CF.class} (F.exam=P) (CF.exam=P) = false at"));
    }
}
