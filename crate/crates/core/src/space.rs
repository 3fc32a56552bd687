//! Finite product measurable spaces.
//!
//! A [`SpaceSchema`] fixes an ordered list of coordinates, each owned by a
//! world and carrying a finite label set. Outcomes are encoded as row-major
//! indices over the coordinates (the first coordinate varies slowest), events
//! are explicit outcome sets, and coordinate-generated sub-σ-algebras are
//! represented by their atoms, the fibres of the projection onto a
//! coordinate subset.

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

/// Largest number of outcomes a schema may have.
pub const MAX_OUTCOMES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coordinate {
    world: String,
    name: String,
    labels: Vec<String>,
}

impl Coordinate {
    pub fn new(
        world: impl Into<String>,
        name: impl Into<String>,
        labels: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let world = world.into();
        let name = name.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Schema(format!("{world}.{name} has no labels")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Schema(format!("{world}.{name} repeats label {l}")));
            }
        }
        Ok(Coordinate { world, name, labels })
    }

    pub fn world(&self) -> &str {
        &self.world
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn arity(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `world.name`, the form used in every text format.
    pub fn qualified(&self) -> String {
        format!("{}.{}", self.world, self.name)
    }
}

/// A set of coordinate positions, kept sorted and duplicate free.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordSet(Vec<usize>);

impl CoordSet {
    pub fn new(coords: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = coords.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        CoordSet(v)
    }

    pub fn empty() -> Self {
        CoordSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    /// Position of `c` inside this set.
    pub fn position(&self, c: usize) -> Option<usize> {
        self.0.binary_search(&c).ok()
    }

    pub fn is_subset(&self, other: &CoordSet) -> bool {
        self.0.iter().all(|c| other.contains(*c))
    }

    pub fn union(&self, other: &CoordSet) -> CoordSet {
        CoordSet::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &CoordSet) -> CoordSet {
        CoordSet(self.iter().filter(|c| other.contains(*c)).collect())
    }

    pub fn difference(&self, other: &CoordSet) -> CoordSet {
        CoordSet(self.iter().filter(|c| !other.contains(*c)).collect())
    }

    /// All subsets, in binary counting order over the members.
    pub fn subsets(&self) -> impl Iterator<Item = CoordSet> + '_ {
        let n = self.0.len();
        assert!(n < usize::BITS as usize, "too many coordinates to enumerate subsets");
        (0..1usize << n).map(move |mask| {
            CoordSet((0..n).filter(|i| mask >> i & 1 == 1).map(|i| self.0[i]).collect())
        })
    }
}

impl FromIterator<usize> for CoordSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        CoordSet::new(iter)
    }
}

/// Labels of an outcome, one index per schema coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome(pub Vec<usize>);

/// Labels on the coordinates of a [`CoordSet`], in set order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialOutcome {
    pub coords: CoordSet,
    pub values: Vec<usize>,
}

/// Index arithmetic for the projection space `Ω_S` of a coordinate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projector {
    coords: CoordSet,
    radices: Vec<usize>,
    /// Stride of each member in the full outcome index.
    full_strides: Vec<usize>,
    /// Stride of each member in the projected index.
    strides: Vec<usize>,
    size: usize,
}

impl Projector {
    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    /// `|Ω_S|`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Index in `Ω_S` of the projection of a full outcome index.
    pub fn project(&self, outcome: usize) -> usize {
        let mut idx = 0;
        for k in 0..self.radices.len() {
            idx += (outcome / self.full_strides[k]) % self.radices[k] * self.strides[k];
        }
        idx
    }

    /// Labels (in set order) of a projected index.
    pub fn decode(&self, sub: usize) -> Vec<usize> {
        (0..self.radices.len())
            .map(|k| sub / self.strides[k] % self.radices[k])
            .collect()
    }

    /// Projected index from a label lookup on the member coordinates.
    pub fn encode_with(&self, mut label_of: impl FnMut(usize) -> usize) -> usize {
        self.coords
            .iter()
            .enumerate()
            .map(|(k, c)| label_of(c) * self.strides[k])
            .sum()
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    /// Label of coordinate `c` (which must be a member) within a projected index.
    pub fn label_in(&self, sub: usize, c: usize) -> usize {
        let k = self.coords.position(c).expect("coordinate not in projector");
        sub / self.strides[k] % self.radices[k]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceSchema {
    coords: Vec<Coordinate>,
    worlds: Vec<String>,
    strides: Vec<usize>,
    size: usize,
}

impl SpaceSchema {
    pub fn new(coords: Vec<Coordinate>) -> Result<Self> {
        let mut worlds: Vec<String> = Vec::new();
        let mut size: usize = 1;
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.world == c.world && d.name == c.name) {
                return Err(Error::Schema(format!("duplicate coordinate {}", c.qualified())));
            }
            if !worlds.contains(&c.world) {
                worlds.push(c.world.clone());
            }
            size = size
                .checked_mul(c.arity())
                .filter(|s| *s <= MAX_OUTCOMES)
                .ok_or(Error::TooLarge { limit: MAX_OUTCOMES })?;
        }
        let mut strides = vec![1; coords.len()];
        for i in (0..coords.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * coords[i + 1].arity();
        }
        Ok(SpaceSchema { coords, worlds, strides, size })
    }

    /// Builds a schema world by world: `(world, [(component, labels)])`.
    pub fn from_worlds<W, C, L>(worlds: W) -> Result<Self>
    where
        W: IntoIterator<Item = (String, C)>,
        C: IntoIterator<Item = (String, L)>,
        L: IntoIterator<Item = String>,
    {
        let mut coords = Vec::new();
        for (world, comps) in worlds {
            for (name, labels) in comps {
                coords.push(Coordinate::new(world.clone(), name, labels)?);
            }
        }
        SpaceSchema::new(coords)
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Coordinate {
        &self.coords[i]
    }

    pub fn num_coords(&self) -> usize {
        self.coords.len()
    }

    /// `|Ω|`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn all_coords(&self) -> CoordSet {
        CoordSet((0..self.coords.len()).collect())
    }

    /// Coordinates belonging to `world` (`T^j`).
    pub fn world_coords(&self, world: &str) -> CoordSet {
        CoordSet(
            self.coords
                .iter()
                .enumerate()
                .filter(|(_, c)| c.world == world)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn find(&self, world: &str, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.world == world && c.name == name)
    }

    /// Looks up `world.name`.
    pub fn find_qualified(&self, qualified: &str) -> Option<usize> {
        let (w, n) = qualified.split_once('.')?;
        self.find(w, n)
    }

    /// Label index of coordinate `c` in outcome `omega`.
    pub fn value(&self, omega: usize, c: usize) -> usize {
        omega / self.strides[c] % self.coords[c].arity()
    }

    pub fn decode(&self, omega: usize) -> Outcome {
        Outcome((0..self.coords.len()).map(|c| self.value(omega, c)).collect())
    }

    pub fn encode(&self, outcome: &Outcome) -> Result<usize> {
        if outcome.0.len() != self.coords.len() {
            return Err(Error::SchemaMismatch(format!(
                "outcome has {} values, schema has {} coordinates",
                outcome.0.len(),
                self.coords.len()
            )));
        }
        let mut idx = 0;
        for (c, &v) in outcome.0.iter().enumerate() {
            if v >= self.coords[c].arity() {
                return Err(Error::Schema(format!(
                    "label index {v} out of range for {}",
                    self.coords[c].qualified()
                )));
            }
            idx += v * self.strides[c];
        }
        Ok(idx)
    }

    /// Outcome index with coordinate `c` set to `label`.
    pub fn with_value(&self, omega: usize, c: usize, label: usize) -> usize {
        omega - self.value(omega, c) * self.strides[c] + label * self.strides[c]
    }

    pub fn check_coordset(&self, s: &CoordSet) -> Result<()> {
        match s.iter().find(|&c| c >= self.coords.len()) {
            Some(c) => Err(Error::Schema(format!("coordinate index {c} out of range"))),
            None => Ok(()),
        }
    }

    pub fn projector(&self, s: &CoordSet) -> Projector {
        let radices: Vec<usize> = s.iter().map(|c| self.coords[c].arity()).collect();
        let full_strides = s.iter().map(|c| self.strides[c]).collect();
        let mut strides = vec![1; radices.len()];
        for k in (0..radices.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * radices[k + 1];
        }
        let size = radices.iter().product();
        Projector { coords: s.clone(), radices, full_strides, strides, size }
    }

    /// Schema of the projection space `Ω_S`, coordinates in set order.
    pub fn sub_schema(&self, s: &CoordSet) -> SpaceSchema {
        SpaceSchema::new(s.iter().map(|c| self.coords[c].clone()).collect())
            .expect("a sub-schema of a valid schema is valid")
    }

    /// Restriction of `omega` to the coordinates in `s`.
    pub fn project(&self, omega: &Outcome, s: &CoordSet) -> PartialOutcome {
        PartialOutcome { coords: s.clone(), values: s.iter().map(|c| omega.0[c]).collect() }
    }

    /// Resolves `(qualified coordinate, label)` pairs to indices.
    pub fn resolve_assignment(&self, pairs: &[(&str, &str)]) -> Result<Vec<(usize, usize)>> {
        pairs
            .iter()
            .map(|(q, l)| {
                let c = self
                    .find_qualified(q)
                    .ok_or_else(|| Error::Schema(format!("unknown coordinate {q}")))?;
                let v = self.coords[c]
                    .label_index(l)
                    .ok_or_else(|| Error::Schema(format!("unknown label {l} for {q}")))?;
                Ok((c, v))
            })
            .collect()
    }

    /// All outcomes agreeing with a partial assignment; the empty assignment is Ω.
    pub fn cylinder(&self, assignment: &[(usize, usize)]) -> Result<Event> {
        let mut fixed: BTreeMap<usize, usize> = BTreeMap::new();
        for &(c, v) in assignment {
            if c >= self.coords.len() {
                return Err(Error::Schema(format!("coordinate index {c} out of range")));
            }
            if v >= self.coords[c].arity() {
                return Err(Error::Schema(format!(
                    "label index {v} out of range for {}",
                    self.coords[c].qualified()
                )));
            }
            if let Some(prev) = fixed.insert(c, v) {
                if prev != v {
                    return Ok(Event::empty(self.size));
                }
            }
        }
        Ok(Event::from_predicate(self.size, |w| {
            fixed.iter().all(|(&c, &v)| self.value(w, c) == v)
        }))
    }

    /// Cylinder from qualified names, e.g. `[("F.class", "Y")]`.
    pub fn cylinder_named(&self, pairs: &[(&str, &str)]) -> Result<Event> {
        self.cylinder(&self.resolve_assignment(pairs)?)
    }

    /// Whether `a` belongs to `ℋ_S`, i.e. is a union of `S`-fibres.
    pub fn is_measurable_wrt(&self, a: &Event, s: &CoordSet) -> bool {
        let proj = self.projector(s);
        // 0 = unseen, 1 = inside, 2 = outside
        let mut state = vec![0u8; proj.size()];
        for w in 0..self.size {
            let k = proj.project(w);
            let here = if a.contains(w) { 1 } else { 2 };
            match state[k] {
                0 => state[k] = here,
                seen if seen != here => return false,
                _ => {}
            }
        }
        true
    }

    /// Atoms of `ℋ_S`: the fibres of the projection onto `S`.
    pub fn atoms_of(&self, s: &CoordSet) -> Partition {
        let proj = self.projector(s);
        Partition {
            block_of: (0..self.size).map(|w| proj.project(w)).collect(),
            blocks: proj.size(),
        }
    }

    pub fn format_coordset(&self, s: &CoordSet) -> String {
        let names: Vec<String> = s.iter().map(|c| self.coords[c].qualified()).collect();
        format!("{{{}}}", names.join(", "))
    }

    /// `(F.class=Y, F.exam=P)` for a projected index of `s`.
    pub fn format_partial(&self, s: &CoordSet, sub: usize) -> String {
        let proj = self.projector(s);
        let vals = proj.decode(sub);
        let parts: Vec<String> = s
            .iter()
            .zip(vals)
            .map(|(c, v)| format!("{}={}", self.coords[c].qualified(), self.coords[c].labels[v]))
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn format_outcome(&self, omega: usize) -> String {
        self.format_partial(&self.all_coords(), omega)
    }
}

/// A set of outcomes of a fixed schema.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Event {
    bits: FixedBitSet,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}

impl Event {
    pub fn empty(universe: usize) -> Self {
        Event { bits: FixedBitSet::with_capacity(universe) }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        Event { bits }
    }

    pub fn singleton(universe: usize, omega: usize) -> Self {
        let mut e = Event::empty(universe);
        e.insert(omega);
        e
    }

    pub fn from_indices(universe: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut e = Event::empty(universe);
        for w in members {
            e.insert(w);
        }
        e
    }

    pub fn from_predicate(universe: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        Event::from_indices(universe, (0..universe).filter(|&w| pred(w)))
    }

    /// Event whose members are the set bits of `mask` (for universes of at most 64 outcomes).
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        Event::from_predicate(universe, |w| mask >> w & 1 == 1)
    }

    /// Size of Ω this event lives in.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, omega: usize) {
        self.bits.insert(omega);
    }

    pub fn contains(&self, omega: usize) -> bool {
        self.bits.contains(omega)
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.universe()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union(&self, other: &Event) -> Event {
        Event { bits: &self.bits | &other.bits }
    }

    pub fn intersection(&self, other: &Event) -> Event {
        Event { bits: &self.bits & &other.bits }
    }

    pub fn difference(&self, other: &Event) -> Event {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        Event { bits }
    }

    pub fn symmetric_difference(&self, other: &Event) -> Event {
        Event { bits: &self.bits ^ &other.bits }
    }

    pub fn complement(&self) -> Event {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Event { bits }
    }
}

/// A partition of Ω, used as the atoms of a finite sub-σ-algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Builds a partition from explicit blocks, which must be disjoint and cover Ω.
    pub fn from_blocks(universe: usize, blocks: &[Event]) -> Result<Self> {
        let mut block_of = vec![usize::MAX; universe];
        for (b, ev) in blocks.iter().enumerate() {
            if ev.universe() != universe {
                return Err(Error::SchemaMismatch("partition block over a different space".into()));
            }
            for w in ev.iter() {
                if block_of[w] != usize::MAX {
                    return Err(Error::Schema(format!("outcome {w} lies in two partition blocks")));
                }
                block_of[w] = b;
            }
        }
        if block_of.contains(&usize::MAX) {
            return Err(Error::Schema("partition blocks do not cover the space".into()));
        }
        Ok(Partition { block_of, blocks: blocks.len() })
    }

    /// The trivial partition `{Ω}`.
    pub fn trivial(universe: usize) -> Self {
        Partition { block_of: vec![0; universe], blocks: 1 }
    }

    pub fn universe(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self, omega: usize) -> usize {
        self.block_of[omega]
    }

    pub fn block(&self, b: usize) -> Event {
        Event::from_predicate(self.universe(), |w| self.block_of[w] == b)
    }

    /// Blocks as events; blocks that happen to be empty are kept so indices line up.
    pub fn blocks(&self) -> Vec<Event> {
        let mut out = vec![Event::empty(self.universe()); self.blocks];
        for (w, &b) in self.block_of.iter().enumerate() {
            out[b].insert(w);
        }
        out
    }

    /// Whether `a` is a union of blocks.
    pub fn measurable(&self, a: &Event) -> bool {
        let mut state = vec![0u8; self.blocks];
        for (w, &b) in self.block_of.iter().enumerate() {
            let here = if a.contains(w) { 1 } else { 2 };
            match state[b] {
                0 => state[b] = here,
                seen if seen != here => return false,
                _ => {}
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exam() -> SpaceSchema {
        SpaceSchema::new(vec![
            Coordinate::new("F", "class", ["Y", "N"]).unwrap(),
            Coordinate::new("F", "exam", ["P", "F"]).unwrap(),
            Coordinate::new("CF", "class", ["Y", "N"]).unwrap(),
            Coordinate::new("CF", "exam", ["P", "F"]).unwrap(),
        ])
        .unwrap()
    }

    fn cube() -> SpaceSchema {
        SpaceSchema::new(
            (1..=3).map(|i| Coordinate::new("W", format!("w{i}"), ["0", "1"]).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(Coordinate::new("F", "x", Vec::<String>::new()).is_err());
        assert!(Coordinate::new("F", "x", ["a", "a"]).is_err());
        let c = Coordinate::new("F", "x", ["a"]).unwrap();
        assert!(SpaceSchema::new(vec![c.clone(), c]).is_err());
    }

    #[test]
    fn size_guard() {
        let coords: Vec<_> = (0..21)
            .map(|i| Coordinate::new("W", format!("c{i}"), ["0", "1"]).unwrap())
            .collect();
        assert_eq!(SpaceSchema::new(coords.clone()).unwrap_err(), Error::TooLarge { limit: MAX_OUTCOMES });
        assert_eq!(SpaceSchema::new(coords[..20].to_vec()).unwrap().size(), 1 << 20);
    }

    #[test]
    fn project_examples() {
        let s = cube();
        let w = Outcome(vec![0, 0, 0]);
        let p = s.project(&w, &CoordSet::new([0, 1]));
        assert_eq!(p.values, vec![0, 0]);
        assert_eq!(s.project(&w, &s.all_coords()).values, w.0);
        assert!(s.project(&w, &CoordSet::empty()).values.is_empty());
    }

    #[test]
    fn projector_matches_decode() {
        let s = exam();
        let set = CoordSet::new([1, 2]);
        let proj = s.projector(&set);
        for w in 0..s.size() {
            let o = s.decode(w);
            assert_eq!(proj.decode(proj.project(w)), vec![o.0[1], o.0[2]]);
            assert_eq!(s.encode(&o).unwrap(), w);
        }
    }

    #[test]
    fn cylinder_examples() {
        let s = exam();
        let row = s.cylinder_named(&[("F.class", "N"), ("F.exam", "F")]).unwrap();
        assert_eq!(row.count(), 4);
        assert!(row.iter().all(|w| s.value(w, 0) == 1 && s.value(w, 1) == 1));
        assert!(s.cylinder(&[]).unwrap().is_full());
        assert_eq!(s.cylinder(&[(0, 0), (1, 0), (2, 1), (3, 1)]).unwrap().count(), 1);
        assert!(s.cylinder_named(&[("F.nope", "Y")]).is_err());
        assert!(s.cylinder_named(&[("F.class", "Q")]).is_err());
        assert!(s.cylinder(&[(0, 0), (0, 1)]).unwrap().is_empty());
    }

    #[test]
    fn measurability_examples() {
        let s = exam();
        let a = s.cylinder_named(&[("F.class", "Y")]).unwrap();
        assert!(s.is_measurable_wrt(&a, &CoordSet::new([0])));
        assert!(!s.is_measurable_wrt(&Event::singleton(16, 3), &CoordSet::empty()));
        assert!(s.is_measurable_wrt(&Event::full(16), &CoordSet::empty()));
        assert!(s.is_measurable_wrt(&Event::empty(16), &CoordSet::empty()));
    }

    #[test]
    fn atoms_examples() {
        let s = exam();
        let p = s.atoms_of(&CoordSet::new([0, 1]));
        assert_eq!(p.num_blocks(), 4);
        assert!(p.blocks().iter().all(|b| b.count() == 4));
        assert_eq!(s.atoms_of(&CoordSet::empty()).num_blocks(), 1);
        let full = s.atoms_of(&s.all_coords());
        assert_eq!(full.num_blocks(), 16);
        assert!(full.blocks().iter().all(|b| b.count() == 1));
    }

    #[test]
    fn measurable_iff_union_of_atoms_exhaustive() {
        let s = cube();
        for set in s.all_coords().subsets() {
            let atoms = s.atoms_of(&set);
            let blocks = atoms.blocks();
            for mask in 0u64..256 {
                let a = Event::from_mask(8, mask);
                let union_of_blocks = blocks
                    .iter()
                    .all(|b| b.intersection(&a).is_empty() || b.difference(&a).is_empty());
                assert_eq!(s.is_measurable_wrt(&a, &set), union_of_blocks);
                assert_eq!(atoms.measurable(&a), union_of_blocks);
            }
        }
    }

    #[test]
    fn trivial_sigma_algebra_is_empty_and_full_only() {
        let s = cube();
        let count = (0u64..256)
            .filter(|&m| s.is_measurable_wrt(&Event::from_mask(8, m), &CoordSet::empty()))
            .count();
        assert_eq!(count, 2);
    }

    #[test]
    fn explicit_partition_validation() {
        let a = Event::from_indices(4, [0, 1]);
        let b = Event::from_indices(4, [2, 3]);
        assert_eq!(Partition::from_blocks(4, &[a.clone(), b]).unwrap().num_blocks(), 2);
        assert!(Partition::from_blocks(4, std::slice::from_ref(&a)).is_err());
        assert!(Partition::from_blocks(4, &[a.clone(), a]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn nested_projection_composes(w in 0usize..16, outer in 0u64..16, inner in 0u64..16) {
                let s = exam();
                let big = CoordSet::new((0..4).filter(|i| outer >> i & 1 == 1));
                let small = CoordSet::new(big.iter().filter(|i| inner >> i & 1 == 1));
                let o = s.decode(w);
                let p = s.project(&o, &big);
                let via: Vec<usize> = small.iter().map(|c| p.values[big.position(c).unwrap()]).collect();
                prop_assert_eq!(via, s.project(&o, &small).values);
            }

            #[test]
            fn cylinder_intersection(a in proptest::collection::vec((0usize..4, 0usize..2), 0..4),
                                     b in proptest::collection::vec((0usize..4, 0usize..2), 0..4)) {
                let s = exam();
                let ca = s.cylinder(&a).unwrap();
                let cb = s.cylinder(&b).unwrap();
                let mut joined = a.clone();
                joined.extend(b.iter().copied());
                prop_assert_eq!(ca.intersection(&cb), s.cylinder(&joined).unwrap());
            }
        }
    }
}
