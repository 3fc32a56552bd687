//! The `.cfs` space format.
//!
//! ```text
//! cfspace exam
//! world F { component class { Y N } component exam { P F } }
//! world CF mirror F
//! measure { (F.class=Y, F.exam=P, CF.class=Y, CF.exam=P) = 0.32 ... default = 0 }
//! kernel on {CF.class} { given (CF.class=Y) { ... } }
//! ```
//!
//! `world B mirror A` copies the components of `A` and declares the two
//! worlds mirrored. Kernel entries that are not given are absent; `K_∅`
//! defaults to the measure.

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::Zero;

use super::lexer::{Cursor, Tok, Token};
use super::{parse_law, parse_name, parse_tuple, Grid};
use crate::counterfactual::WorldMirror;
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::mechanism::{CausalSpace, Kernel, Mechanism};
use crate::rational::format_rational;
use crate::space::{CoordSet, Coordinate, SpaceSchema};

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDocument {
    pub name: String,
    pub space: CausalSpace,
    /// Worlds declared as mirror images, for symmetry checks.
    pub mirror: Option<(String, String)>,
}

impl SpaceDocument {
    pub fn new(name: impl Into<String>, space: CausalSpace) -> Self {
        SpaceDocument { name: name.into(), space, mirror: None }
    }

    pub fn world_mirror(&self) -> Result<Option<WorldMirror>> {
        self.mirror
            .as_ref()
            .map(|(a, b)| WorldMirror::new(self.space.schema(), a, b))
            .transpose()
    }
}

fn schema_error(at: &Token, e: Error) -> Error {
    match e {
        Error::Schema(m) | Error::SchemaMismatch(m) => Cursor::semantic_at(at, m),
        Error::TooLarge { limit } => Cursor::semantic_at(at, format!("space has more than {limit} outcomes")),
        other => other,
    }
}

/// `{ A.x, B.y }`, resolved against a schema.
pub(crate) fn parse_coordset(cur: &mut Cursor, schema: &SpaceSchema) -> Result<CoordSet> {
    cur.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        let (name, at) = parse_name(cur)?;
        let c = schema
            .find_qualified(&name)
            .ok_or_else(|| Cursor::semantic_at(&at, format!("unknown coordinate {name}")))?;
        if out.contains(&c) {
            return Err(Cursor::semantic_at(&at, format!("{name} listed twice")));
        }
        out.push(c);
        cur.eat(&Tok::Comma);
    }
    Ok(CoordSet::new(out))
}

type Components = Vec<(String, Vec<String>)>;

fn parse_components(cur: &mut Cursor) -> Result<Components> {
    cur.expect(&Tok::LBrace)?;
    let mut comps = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        cur.expect_keyword("component")?;
        let (name, _) = cur.word("a component name")?;
        cur.expect(&Tok::LBrace)?;
        let mut labels = Vec::new();
        while !cur.eat(&Tok::RBrace) {
            labels.push(cur.label()?.0);
            cur.eat(&Tok::Comma);
        }
        comps.push((name, labels));
    }
    Ok(comps)
}

pub fn parse_space(src: &str) -> Result<SpaceDocument> {
    let mut cur = Cursor::new(src, true)?;
    cur.expect_keyword("cfspace")?;
    let (name, _) = cur.word("a space name")?;

    let mut worlds: Vec<(String, Components, Token)> = Vec::new();
    let mut mirror = None;
    while cur.is_keyword("world") {
        let at = cur.bump();
        let (w, wt) = cur.word("a world name")?;
        if worlds.iter().any(|x| x.0 == w) {
            return Err(Cursor::semantic_at(&wt, format!("world {w} declared twice")));
        }
        let comps = if cur.eat_keyword("mirror") {
            let (src_w, st) = cur.word("a world name")?;
            let comps = worlds
                .iter()
                .find(|x| x.0 == src_w)
                .map(|x| x.1.clone())
                .ok_or_else(|| Cursor::semantic_at(&st, format!("unknown world {src_w}")))?;
            if mirror.is_none() {
                mirror = Some((src_w, w.clone(), st));
            }
            comps
        } else {
            parse_components(&mut cur)?
        };
        if comps.is_empty() {
            return Err(Cursor::semantic_at(&wt, format!("world {w} has no components")));
        }
        worlds.push((w, comps, at));
    }
    if worlds.is_empty() {
        return Err(cur.unexpected("`world`"));
    }
    let mut coords = Vec::new();
    for (w, comps, at) in &worlds {
        for (c, labels) in comps {
            coords.push(Coordinate::new(w.clone(), c.clone(), labels.clone()).map_err(|e| schema_error(at, e))?);
        }
    }
    let schema = Arc::new(SpaceSchema::new(coords).map_err(|e| schema_error(&worlds[0].2, e))?);
    let grid = Grid::from_schema(&schema);

    let mut measure: Option<Vec<crate::rational::Prob>> = None;
    let mut kernels: Vec<(Kernel, Token)> = Vec::new();
    loop {
        if cur.is_keyword("measure") {
            let at = cur.bump();
            if measure.is_some() {
                return Err(Cursor::semantic_at(&at, "measure given twice"));
            }
            measure = Some(parse_law(&mut cur, &grid, "measure")?);
        } else if cur.is_keyword("kernel") {
            let at = cur.bump();
            cur.expect_keyword("on")?;
            let s = parse_coordset(&mut cur, &schema)?;
            if kernels.iter().any(|(k, _)| *k.on() == s) {
                return Err(Cursor::semantic_at(&at, format!("kernel on {} given twice", schema.format_coordset(&s))));
            }
            let mut k = Kernel::empty(&schema, s.clone())?;
            cur.expect(&Tok::LBrace)?;
            while !cur.eat(&Tok::RBrace) {
                cur.expect_keyword("given")?;
                let (values, gt) = parse_tuple(&mut cur, &grid, s.as_slice())?;
                let assigned: Vec<usize> = (0..values.len()).filter(|&c| values[c].is_some()).collect();
                if assigned != s.as_slice() {
                    return Err(Cursor::semantic_at(
                        &gt,
                        format!("given tuple must assign exactly {}", schema.format_coordset(&s)),
                    ));
                }
                let sub = k.projector().encode_with(|c| values[c].expect("assigned"));
                if k.entry(sub).is_some() {
                    return Err(Cursor::semantic_at(&gt, "kernel entry given twice"));
                }
                let what = format!("kernel entry K_{}{}", schema.format_coordset(&s), schema.format_partial(&s, sub));
                let law = parse_law(&mut cur, &grid, &what)?;
                k.set_entry(sub, Some(Measure::new(schema.clone(), law)?))?;
            }
            kernels.push((k, at));
        } else if cur.is_keyword("mirror") {
            let at = cur.bump();
            let (a, _) = cur.word("a world name")?;
            let (b, _) = cur.word("a world name")?;
            mirror = Some((a, b, at));
        } else {
            break;
        }
    }
    if !cur.at_eof() {
        return Err(cur.unexpected("`measure`, `kernel`, `mirror` or end of input"));
    }

    let empty = CoordSet::empty();
    let k0 = kernels.iter().find(|(k, _)| *k.on() == empty);
    let prob = match (measure, k0) {
        (Some(w), _) => Measure::new(schema.clone(), w)?,
        (None, Some((k, at))) => k
            .entry(0)
            .cloned()
            .ok_or_else(|| Cursor::semantic_at(at, "K_{} needs its entry"))?,
        (None, None) => return Err(Cursor::semantic_at(&worlds[0].2, "the space has no measure")),
    };
    let mut mech = Mechanism::new(&prob);
    for (k, at) in kernels {
        if k.on().is_empty() && !k.is_total() {
            return Err(Cursor::semantic_at(&at, "K_{} needs its entry"));
        }
        mech.insert(k)?;
    }
    let space = CausalSpace::new(prob, mech)?;
    let mirror = match mirror {
        Some((a, b, at)) => {
            WorldMirror::new(space.schema(), &a, &b).map_err(|e| schema_error(&at, e))?;
            Some((a, b))
        }
        None => None,
    };
    Ok(SpaceDocument { name, space, mirror })
}

fn write_law(out: &mut String, indent: &str, schema: &SpaceSchema, m: &Measure) {
    let all = schema.all_coords();
    for (w, p) in m.weights().iter().enumerate() {
        if !p.is_zero() {
            let _ = writeln!(out, "{indent}{} = {}", schema.format_partial(&all, w), format_rational(p));
        }
    }
    let _ = writeln!(out, "{indent}default = 0");
}

/// Canonical text: explicit worlds, nonzero outcomes in index order with
/// reduced fractions, given kernel entries only.
pub fn serialize_space(doc: &SpaceDocument) -> String {
    let schema = doc.space.schema();
    let mut out = String::new();
    let _ = writeln!(out, "cfspace {}", doc.name);
    for w in schema.worlds() {
        let _ = writeln!(out, "\nworld {w} {{");
        for c in schema.world_coords(w).iter() {
            let coord = schema.coord(c);
            let _ = writeln!(out, "  component {} {{ {} }}", coord.name(), coord.labels().join(" "));
        }
        out.push_str("}\n");
    }
    out.push_str("\nmeasure {\n");
    write_law(&mut out, "  ", schema, doc.space.prob());
    out.push_str("}\n");
    for k in doc.space.mechanism().kernels() {
        if k.on().is_empty() && k.entry(0) == Some(doc.space.prob()) {
            continue;
        }
        let _ = writeln!(out, "\nkernel on {} {{", schema.format_coordset(k.on()));
        for (sub, m) in k.present() {
            let _ = writeln!(out, "  given {} {{", schema.format_partial(k.on(), sub));
            write_law(&mut out, "    ", schema, m);
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    if let Some((a, b)) = &doc.mirror {
        let _ = writeln!(out, "\nmirror {a} {b}");
    }
    out
}
