//! World structure on causal spaces: conditioning whole spaces, the
//! cross-world axiom, event classification, symmetry, marginalisation and
//! N-way construction.
//!
//! Worlds are the `world` labels of the schema coordinates; a space with two
//! worlds is a counterfactual space, one with N worlds an N-way space.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::mechanism::{AxiomReport, CausalSpace, Kernel, Mechanism, Uncheckable, Violation};
use crate::par;
use crate::rational::Prob;
use crate::space::{CoordSet, Coordinate, Event, SpaceSchema};

/// Which world σ-algebras an event belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventClass {
    /// `∅` or `Ω`, which belong to every world.
    Trivial,
    World(String),
    CrossWorld,
}

/// Identification of two worlds' coordinates, matched by component name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldMirror {
    left: String,
    right: String,
    /// Image of every schema coordinate; coordinates outside both worlds map to themselves.
    image: Vec<usize>,
}

impl WorldMirror {
    /// Pairs each coordinate of `left` with the coordinate of `right` that
    /// has the same component name; label lists must match exactly.
    pub fn new(schema: &SpaceSchema, left: &str, right: &str) -> Result<Self> {
        let (tl, tr) = (schema.world_coords(left), schema.world_coords(right));
        if tl.is_empty() || tr.is_empty() || left == right {
            return Err(Error::Schema(format!("cannot mirror worlds {left} and {right}")));
        }
        if tl.len() != tr.len() {
            return Err(Error::Schema(format!(
                "worlds {left} and {right} have {} and {} components",
                tl.len(),
                tr.len()
            )));
        }
        let mut image: Vec<usize> = (0..schema.num_coords()).collect();
        for c in tl.iter() {
            let name = schema.coord(c).name();
            let d = schema
                .find(right, name)
                .ok_or_else(|| Error::Schema(format!("world {right} has no component {name}")))?;
            if schema.coord(c).labels() != schema.coord(d).labels() {
                return Err(Error::Schema(format!(
                    "{} and {} have different labels",
                    schema.coord(c).qualified(),
                    schema.coord(d).qualified()
                )));
            }
            image[c] = d;
            image[d] = c;
        }
        Ok(WorldMirror { left: left.into(), right: right.into(), image })
    }

    pub fn left(&self) -> &str {
        &self.left
    }

    pub fn right(&self) -> &str {
        &self.right
    }

    pub fn coord(&self, c: usize) -> usize {
        self.image[c]
    }

    pub fn coordset(&self, s: &CoordSet) -> CoordSet {
        s.iter().map(|c| self.image[c]).collect()
    }

    /// The outcome with the two worlds swapped.
    pub fn outcome(&self, schema: &SpaceSchema, omega: usize) -> usize {
        let mut out = omega;
        for c in 0..schema.num_coords() {
            let d = self.image[c];
            if d != c {
                out = schema.with_value(out, d, schema.value(omega, c));
            }
        }
        out
    }

    /// Image of a projected index of `Ω_S` in `Ω_{σS}`.
    pub fn sub(&self, schema: &SpaceSchema, s: &CoordSet, sub: usize) -> usize {
        let ps = schema.projector(s);
        let image = self.coordset(s);
        let pi = schema.projector(&image);
        pi.encode_with(|d| ps.label_in(sub, self.image[d]))
    }
}

/// Result of a symmetry check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymmetryReport {
    /// First outcome `ω` with `P(ω) ≠ P(σω)`, with both values.
    pub measure: Option<(usize, Prob, Prob)>,
    /// Kernel entries `(S, ω_S)` whose mirrored entry disagrees.
    pub kernel_failures: Vec<(CoordSet, usize)>,
    /// Kernels whose mirrored kernel or some mirrored entry is absent.
    pub uncheckable: Vec<CoordSet>,
}

impl SymmetryReport {
    pub fn measure_symmetric(&self) -> bool {
        self.measure.is_none()
    }

    pub fn is_symmetric(&self) -> bool {
        self.measure.is_none() && self.kernel_failures.is_empty()
    }
}

/// Coordinates of one world: `(component, labels)` in order.
pub type WorldSpec = (String, Vec<(String, Vec<String>)>);

impl CausalSpace {
    pub fn worlds(&self) -> &[String] {
        self.schema().worlds()
    }

    /// Conditions the whole space on `G`: `P` becomes `P_G` and every kernel
    /// entry is conditioned on `G`. Entries giving `G` zero mass become absent.
    pub fn condition(&self, g: &Event) -> Result<CausalSpace> {
        self.check_event(g)?;
        let prob = self.prob().condition_event(g)?;
        let mut mech = Mechanism::new(&prob);
        for k in self.mechanism().kernels() {
            let mut c = k.conditioned(g);
            if k.on().is_empty() && c.entry(0).is_none() {
                c.set_entry(0, Some(prob.clone()))?;
            }
            mech.insert(c)?;
        }
        CausalSpace::new(prob, mech)
    }

    /// For every world `T^j` and present `K_S` with `S ⊄ T^j`, the world-`j`
    /// marginal of each entry must match `K_{S∩T^j}` at the projection.
    pub fn check_cross_world(&self) -> AxiomReport {
        let schema = self.schema();
        let mut report = AxiomReport::default();
        for world in schema.worlds() {
            let tj = schema.world_coords(world);
            let proj_tj = schema.projector(&tj);
            for k in self.mechanism().kernels() {
                let s = k.on();
                if s.is_subset(&tj) {
                    continue;
                }
                let r = s.intersection(&tj);
                let present = k.present().count();
                let Some(kr) = self.mechanism().get(&r) else {
                    if present > 0 {
                        report.uncheckable.push(Uncheckable {
                            world: world.clone(),
                            on: s.clone(),
                            needs: r,
                            entries: present,
                        });
                    }
                    continue;
                };
                let proj_r = schema.projector(&r);
                let rows = par::map_range(k.len(), |si| {
                    let m = k.entry(si)?;
                    let ri = proj_r.encode_with(|c| k.projector().label_in(si, c));
                    let Some(mr) = kr.entry(ri) else {
                        return Some(Err(()));
                    };
                    let a = m.marginal_weights(&proj_tj);
                    let b = mr.marginal_weights(&proj_tj);
                    Some(Ok((0..a.len()).find(|&i| a[i] != b[i]).map(|i| (i, a[i].clone(), b[i].clone()))))
                });
                let mut blocked = 0;
                for (given, row) in rows.into_iter().enumerate() {
                    match row {
                        Some(Err(())) => blocked += 1,
                        Some(Ok(Some((atom, kernel, reference)))) => report.violations.push(Violation::CrossWorld {
                            world: world.clone(),
                            on: s.clone(),
                            given,
                            atom,
                            kernel,
                            reference,
                        }),
                        _ => {}
                    }
                }
                if blocked > 0 {
                    report.uncheckable.push(Uncheckable {
                        world: world.clone(),
                        on: s.clone(),
                        needs: r,
                        entries: blocked,
                    });
                }
            }
        }
        report
    }

    /// Normalisation, determinism and cross-world consistency together.
    pub fn check_all(&self) -> AxiomReport {
        let mut r = self.check_axioms();
        r.merge(self.check_cross_world());
        r
    }

    pub fn classify_event(&self, a: &Event) -> Result<EventClass> {
        self.check_event(a)?;
        if a.is_empty() || a.is_full() {
            return Ok(EventClass::Trivial);
        }
        for world in self.worlds() {
            if self.schema().is_measurable_wrt(a, &self.schema().world_coords(world)) {
                return Ok(EventClass::World(world.clone()));
            }
        }
        Ok(EventClass::CrossWorld)
    }

    /// `P(ω) = P(σω)` for every outcome and, for every present kernel,
    /// `K_S(ω_S, ω) = K_{σS}(σω_S, σω)`.
    pub fn is_symmetric(&self, mirror: &WorldMirror) -> Result<SymmetryReport> {
        let schema = self.schema();
        for w in [mirror.left(), mirror.right()] {
            if !schema.worlds().iter().any(|x| x == w) {
                return Err(Error::Schema(format!("unknown world {w}")));
            }
        }
        let n = schema.size();
        let swap: Vec<usize> = par::map_range(n, |w| mirror.outcome(schema, w));
        let p = self.prob();
        let mut report = SymmetryReport {
            measure: (0..n)
                .find(|&w| p.weight(w) != p.weight(swap[w]))
                .map(|w| (w, p.weight(w).clone(), p.weight(swap[w]).clone())),
            ..SymmetryReport::default()
        };
        for k in self.mechanism().kernels() {
            let s = k.on();
            let Some(km) = self.mechanism().get(&mirror.coordset(s)) else {
                report.uncheckable.push(s.clone());
                continue;
            };
            let mut partial = false;
            for (si, m) in k.present() {
                match km.entry(mirror.sub(schema, s, si)) {
                    None => partial = true,
                    Some(mm) => {
                        if (0..n).any(|w| m.weight(w) != mm.weight(swap[w])) {
                            report.kernel_failures.push((s.clone(), si));
                        }
                    }
                }
            }
            if partial {
                report.uncheckable.push(s.clone());
            }
        }
        Ok(report)
    }

    /// Pushforward of the space onto the coordinates in `keep`.
    ///
    /// Kernels on sets `S ⊆ keep` survive with every entry pushed forward;
    /// the others are dropped. Dropping every coordinate of a world is
    /// refused unless `allow_dropping_worlds` is set.
    pub fn marginalize(&self, keep: &CoordSet, allow_dropping_worlds: bool) -> Result<CausalSpace> {
        let schema = self.schema();
        schema.check_coordset(keep)?;
        if !allow_dropping_worlds {
            if let Some(w) = schema.worlds().iter().find(|w| keep.intersection(&schema.world_coords(w)).is_empty()) {
                return Err(Error::Schema(format!("marginalising drops every coordinate of world {w}")));
            }
        }
        let target = Arc::new(schema.sub_schema(keep));
        let prob = self.prob().marginal_onto(keep, &target);
        let renumber = |s: &CoordSet| CoordSet::new(s.iter().map(|c| keep.position(c).expect("kept")));
        let mut mech = Mechanism::new(&prob);
        for k in self.mechanism().kernels().filter(|k| k.on().is_subset(keep)) {
            let entries = par::map_slice(k.entries(), |m| m.as_ref().map(|m| m.marginal_onto(keep, &target)));
            mech.insert(Kernel::new(&target, renumber(k.on()), entries)?)?;
        }
        CausalSpace::new(prob, mech)
    }
}

/// Assembles an N-way space from per-world coordinates, outcome weights in
/// row-major order, and kernels given as `(S, entries)` with each entry a
/// weight vector or absent. `K_∅` defaults to `P`.
pub fn build_nway(
    worlds: Vec<WorldSpec>,
    weights: Vec<Prob>,
    kernels: Vec<(CoordSet, Vec<Option<Vec<Prob>>>)>,
) -> Result<CausalSpace> {
    if worlds.is_empty() {
        return Err(Error::Schema("a space needs at least one world".into()));
    }
    let mut coords = Vec::new();
    let mut seen = BTreeMap::new();
    for (world, comps) in worlds {
        if seen.insert(world.clone(), ()).is_some() {
            return Err(Error::Schema(format!("world {world} declared twice")));
        }
        if comps.is_empty() {
            return Err(Error::Schema(format!("world {world} has no components")));
        }
        for (name, labels) in comps {
            coords.push(Coordinate::new(world.clone(), name, labels)?);
        }
    }
    let schema = Arc::new(SpaceSchema::new(coords)?);
    let prob = Measure::new(schema.clone(), weights)?;
    let mut mech = Mechanism::new(&prob);
    for (s, entries) in kernels {
        let entries = entries
            .into_iter()
            .map(|e| e.map(|w| Measure::new(schema.clone(), w)).transpose())
            .collect::<Result<Vec<_>>>()?;
        mech.insert(Kernel::new(&schema, s, entries)?)?;
    }
    CausalSpace::new(prob, mech)
}
