//! Text formats: `.cfs` spaces, `.cfq` query scripts and `.scm`/`.bscm`/`.po`
//! model files. All share one tokenizer; `#` starts a comment.

pub mod lexer;
pub mod model;
pub mod query;
pub mod space_doc;

use num_traits::{One, Zero};

use crate::error::Result;
use crate::rational::{format_rational, parse_rational, Prob};
use crate::space::SpaceSchema;
use lexer::{Cursor, Tok, Token};

pub use model::{compile_source, parse_bscm, parse_po, parse_scm, ModelKind};
pub use query::{parse_query, run, QueryScript, RunOutcome};
pub use space_doc::{parse_space, serialize_space, SpaceDocument};

/// Named finite variables indexed row-major, the first slowest.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub names: Vec<String>,
    pub labels: Vec<Vec<String>>,
}

impl Grid {
    pub fn from_schema(schema: &SpaceSchema) -> Self {
        Grid {
            names: schema.coords().iter().map(|c| c.qualified()).collect(),
            labels: schema.coords().iter().map(|c| c.labels().to_vec()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.labels.iter().map(Vec::len).product()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn index(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.labels).fold(0, |acc, (v, l)| acc * l.len() + v)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.labels.len()];
        for k in (0..self.labels.len()).rev() {
            out[k] = idx % self.labels[k].len();
            idx /= self.labels[k].len();
        }
        out
    }
}

/// A name, either bare (`UX`) or qualified (`F.class`).
pub(crate) fn parse_name(cur: &mut Cursor) -> Result<(String, Token)> {
    let (w, t) = cur.word("a name")?;
    if cur.eat(&Tok::Dot) {
        let (rest, _) = cur.label()?;
        Ok((format!("{w}.{rest}"), t))
    } else {
        Ok((w, t))
    }
}

pub(crate) fn parse_number(cur: &mut Cursor) -> Result<(Prob, Token)> {
    let t = cur.bump();
    match &t.tok {
        Tok::Number(n) => match parse_rational(n) {
            Some(r) => Ok((r, t)),
            None => Err(Cursor::error_at(&t, format!("invalid number `{n}`"))),
        },
        other => Err(Cursor::error_at(&t, format!("expected a probability, found {}", other.describe()))),
    }
}

/// `(name=label, ...)` or, positionally, `(label, ...)` over `positional`.
/// Returns a partial assignment over the grid variables.
pub(crate) fn parse_tuple(cur: &mut Cursor, grid: &Grid, positional: &[usize]) -> Result<(Vec<Option<usize>>, Token)> {
    let open = cur.expect(&Tok::LParen)?;
    let mut values = vec![None; grid.names.len()];
    if cur.eat(&Tok::RParen) {
        return Ok((values, open));
    }
    let named = matches!(cur.peek2(), Tok::Eq | Tok::Dot);
    let mut k = 0;
    loop {
        let (var, label, at) = if named {
            let (name, at) = parse_name(cur)?;
            let var = grid
                .find(&name)
                .ok_or_else(|| Cursor::semantic_at(&at, format!("unknown coordinate {name}")))?;
            cur.expect(&Tok::Eq)?;
            let (label, lt) = cur.label()?;
            (var, label, lt)
        } else {
            let (label, at) = cur.label()?;
            let var = *positional
                .get(k)
                .ok_or_else(|| Cursor::semantic_at(&at, "too many values in tuple"))?;
            (var, label, at)
        };
        let v = grid.labels[var]
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| Cursor::semantic_at(&at, format!("unknown label {label} for {}", grid.names[var])))?;
        if values[var].replace(v).is_some() {
            return Err(Cursor::semantic_at(&at, format!("{} assigned twice", grid.names[var])));
        }
        k += 1;
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::RParen)?;
    if !named && k != positional.len() {
        return Err(Cursor::semantic_at(&open, format!("tuple needs {} values, got {k}", positional.len())));
    }
    Ok((values, open))
}

/// `{ (tuple) = p ... [default = p] }`: a probability law over the grid.
/// Every tuple must assign every variable; unlisted points take `default`.
pub(crate) fn parse_law(cur: &mut Cursor, grid: &Grid, what: &str) -> Result<Vec<Prob>> {
    let open = cur.expect(&Tok::LBrace)?;
    let all: Vec<usize> = (0..grid.names.len()).collect();
    let mut weights: Vec<Option<Prob>> = vec![None; grid.size()];
    let mut default = None;
    loop {
        if cur.eat(&Tok::RBrace) {
            break;
        }
        if cur.is_keyword("default") {
            let t = cur.bump();
            cur.expect(&Tok::Eq)?;
            let (p, _) = parse_number(cur)?;
            if default.replace(p).is_some() {
                return Err(Cursor::semantic_at(&t, "default given twice"));
            }
            cur.eat(&Tok::Comma);
            continue;
        }
        let (values, at) = parse_tuple(cur, grid, &all)?;
        if let Some(missing) = values.iter().position(Option::is_none) {
            return Err(Cursor::semantic_at(&at, format!("outcome tuple omits {}", grid.names[missing])));
        }
        let values: Vec<usize> = values.into_iter().map(Option::unwrap).collect();
        cur.expect(&Tok::Eq)?;
        let (p, _) = parse_number(cur)?;
        let idx = grid.index(&values);
        if weights[idx].replace(p).is_some() {
            return Err(Cursor::semantic_at(&at, "outcome listed twice"));
        }
        cur.eat(&Tok::Comma);
    }
    let uncovered = weights.iter().filter(|w| w.is_none()).count();
    let weights: Vec<Prob> = match default {
        Some(d) => weights.into_iter().map(|w| w.unwrap_or_else(|| d.clone())).collect(),
        None if uncovered > 0 => {
            return Err(Cursor::semantic_at(
                &open,
                format!("{what} leaves {uncovered} outcomes unlisted and has no default"),
            ))
        }
        None => weights.into_iter().map(Option::unwrap).collect(),
    };
    let total: Prob = weights.iter().sum();
    if !total.is_one() {
        let gap = Prob::one() - &total;
        let detail = if gap > Prob::zero() {
            format!("deficit {}", format_rational(&gap))
        } else {
            format!("excess {}", format_rational(&-gap))
        };
        return Err(Cursor::semantic_at(
            &open,
            format!("{what} sums to {} ({detail})", format_rational(&total)),
        ));
    }
    Ok(weights)
}

/// Collapses whitespace so statement echoes are single-line.
pub(crate) fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
