//! Probability measures on finite spaces with exact rational weights.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Prob};
use crate::space::{CoordSet, Event, Partition, Projector, SpaceSchema};

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    schema: Arc<SpaceSchema>,
    weights: Vec<Prob>,
}

impl Measure {
    /// Validates nonnegativity and that the weights sum to exactly one.
    pub fn new(schema: Arc<SpaceSchema>, weights: Vec<Prob>) -> Result<Self> {
        if weights.len() != schema.size() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} outcomes",
                weights.len(),
                schema.size()
            )));
        }
        if let Some(w) = weights.iter().position(|p| p.is_negative()) {
            return Err(Error::InvalidMeasure(format!(
                "negative weight at {}",
                schema.format_outcome(w)
            )));
        }
        let total: Prob = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {} (deficit {})",
                format_rational(&total),
                format_rational(&(Prob::one() - &total))
            )));
        }
        Ok(Measure { schema, weights })
    }

    /// Caller guarantees the weights already form a probability measure.
    pub(crate) fn from_parts(schema: Arc<SpaceSchema>, weights: Vec<Prob>) -> Self {
        debug_assert_eq!(weights.len(), schema.size());
        debug_assert!(weights.iter().sum::<Prob>().is_one());
        Measure { schema, weights }
    }

    pub fn uniform(schema: Arc<SpaceSchema>) -> Self {
        let n = schema.size();
        let w = Prob::new(1.into(), (n as i64).into());
        Measure { weights: vec![w; n], schema }
    }

    /// `δ_ω`.
    pub fn dirac(schema: Arc<SpaceSchema>, omega: usize) -> Self {
        assert!(omega < schema.size(), "outcome index out of range");
        let mut weights = vec![Prob::zero(); schema.size()];
        weights[omega] = Prob::one();
        Measure { schema, weights }
    }

    pub fn schema(&self) -> &Arc<SpaceSchema> {
        &self.schema
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub fn weight(&self, omega: usize) -> &Prob {
        &self.weights[omega]
    }

    pub fn support(&self) -> Event {
        Event::from_predicate(self.weights.len(), |w| !self.weights[w].is_zero())
    }

    fn check_event(&self, a: &Event) -> Result<()> {
        if a.universe() != self.weights.len() {
            return Err(Error::SchemaMismatch(format!(
                "event over {} outcomes, measure over {}",
                a.universe(),
                self.weights.len()
            )));
        }
        Ok(())
    }

    /// `P(A)`.
    pub fn prob(&self, a: &Event) -> Result<Prob> {
        self.check_event(a)?;
        Ok(self.prob_unchecked(a))
    }

    pub(crate) fn prob_unchecked(&self, a: &Event) -> Prob {
        a.iter().map(|w| &self.weights[w]).sum()
    }

    /// `P_G`, defined only when `P(G) > 0`.
    pub fn condition_event(&self, g: &Event) -> Result<Measure> {
        let pg = self.prob(g)?;
        if pg.is_zero() {
            return Err(Error::ConditioningUndefined("the conditioning event".into()));
        }
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(w, p)| if g.contains(w) { p / &pg } else { Prob::zero() })
            .collect();
        Ok(Measure { schema: self.schema.clone(), weights })
    }

    /// `P_G(A)`.
    pub fn conditional(&self, a: &Event, g: &Event) -> Result<Prob> {
        self.check_event(a)?;
        let pg = self.prob(g)?;
        if pg.is_zero() {
            return Err(Error::ConditioningUndefined("the conditioning event".into()));
        }
        Ok(self.prob_unchecked(&a.intersection(g)) / pg)
    }

    /// Conditional probability given the σ-algebra generated by `partition`.
    pub fn condition_sigma(&self, partition: &Partition) -> Result<AtomConditional> {
        if partition.universe() != self.weights.len() {
            return Err(Error::SchemaMismatch("partition over a different space".into()));
        }
        let mut table = Vec::with_capacity(partition.num_blocks());
        let mut null_atoms = Vec::new();
        for (b, block) in partition.blocks().iter().enumerate() {
            if self.prob_unchecked(block).is_zero() {
                null_atoms.push(b);
                table.push(self.clone());
            } else {
                table.push(self.condition_event(block)?);
            }
        }
        Ok(AtomConditional { partition: partition.clone(), table, null_atoms })
    }

    /// Conditional probability given `ℋ_S`.
    pub fn condition_coords(&self, s: &CoordSet) -> Result<AtomConditional> {
        self.schema.check_coordset(s)?;
        self.condition_sigma(&self.schema.atoms_of(s))
    }

    /// Pushforward onto `Ω_S` (the marginal law of the `S` coordinates).
    pub fn marginal(&self, s: &CoordSet) -> Measure {
        let weights = self.marginal_weights(&self.schema.projector(s));
        Measure { schema: Arc::new(self.schema.sub_schema(s)), weights }
    }

    /// Pushforward onto `Ω_S` as a weight vector indexed like `proj`.
    pub fn marginal_weights(&self, proj: &Projector) -> Vec<Prob> {
        let mut weights = vec![Prob::zero(); proj.size()];
        for (w, p) in self.weights.iter().enumerate() {
            if !p.is_zero() {
                weights[proj.project(w)] += p;
            }
        }
        weights
    }

    /// Pushforward onto `Ω_S` where `target` is the caller's copy of the
    /// sub-schema of `s`.
    pub(crate) fn marginal_onto(&self, s: &CoordSet, target: &Arc<SpaceSchema>) -> Measure {
        debug_assert_eq!(target.coords(), self.schema.sub_schema(s).coords());
        Measure { schema: target.clone(), weights: self.marginal_weights(&self.schema.projector(s)) }
    }

    pub fn independent(&self, a: &Event, b: &Event) -> Result<bool> {
        self.check_event(a)?;
        self.check_event(b)?;
        Ok(self.prob_unchecked(&a.intersection(b)) == self.prob_unchecked(a) * self.prob_unchecked(b))
    }

    /// Fails with `ConditioningUndefined` when `P(G) = 0`.
    pub fn independent_given(&self, a: &Event, b: &Event, g: &Event) -> Result<bool> {
        self.condition_event(g)?.independent(a, b)
    }

    /// `A ⟂ B` given the σ-algebra of `partition`, checked on every positive atom.
    pub fn independent_given_sigma(&self, a: &Event, b: &Event, partition: &Partition) -> Result<bool> {
        let cond = self.condition_sigma(partition)?;
        for (blk, m) in cond.table.iter().enumerate() {
            if cond.null_atoms.contains(&blk) {
                continue;
            }
            if !m.independent(a, b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Independence of the σ-algebras generated by two partitions; it suffices
    /// to check the product identity on pairs of atoms.
    pub fn independent_partitions(&self, p1: &Partition, p2: &Partition) -> Result<bool> {
        if p1.universe() != self.weights.len() || p2.universe() != self.weights.len() {
            return Err(Error::SchemaMismatch("partition over a different space".into()));
        }
        let mut joint: HashMap<(usize, usize), Prob> = HashMap::new();
        let mut m1 = vec![Prob::zero(); p1.num_blocks()];
        let mut m2 = vec![Prob::zero(); p2.num_blocks()];
        for (w, p) in self.weights.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let (b1, b2) = (p1.block_of(w), p2.block_of(w));
            *joint.entry((b1, b2)).or_insert_with(Prob::zero) += p;
            m1[b1] += p;
            m2[b2] += p;
        }
        for (b1, x) in m1.iter().enumerate() {
            for (b2, y) in m2.iter().enumerate() {
                let expected = x * y;
                let got = joint.get(&(b1, b2)).cloned().unwrap_or_else(Prob::zero);
                if got != expected {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `ℋ_{S1} ⟂ ℋ_{S2}` under this measure.
    pub fn independent_sigmas(&self, s1: &CoordSet, s2: &CoordSet) -> Result<bool> {
        self.schema.check_coordset(s1)?;
        self.schema.check_coordset(s2)?;
        self.independent_partitions(&self.schema.atoms_of(s1), &self.schema.atoms_of(s2))
    }

    pub fn independent_sigmas_given(&self, s1: &CoordSet, s2: &CoordSet, g: &Event) -> Result<bool> {
        self.condition_event(g)?.independent_sigmas(s1, s2)
    }

    /// `ℋ_{S1} ⟂ ℋ_{S2}` given the σ-algebra of `partition`, on every positive atom.
    pub fn independent_sigmas_given_sigma(
        &self,
        s1: &CoordSet,
        s2: &CoordSet,
        partition: &Partition,
    ) -> Result<bool> {
        let cond = self.condition_sigma(partition)?;
        for (blk, m) in cond.table.iter().enumerate() {
            if !cond.null_atoms.contains(&blk) && !m.independent_sigmas(s1, s2)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `P(A Δ B) = 0`.
    pub fn as_equal(&self, a: &Event, b: &Event) -> Result<bool> {
        self.check_event(a)?;
        self.check_event(b)?;
        Ok(self.prob_unchecked(&a.symmetric_difference(b)).is_zero())
    }

    pub fn as_equal_given(&self, g: &Event, a: &Event, b: &Event) -> Result<bool> {
        self.condition_event(g)?.as_equal(a, b)
    }

    /// Whether the σ-algebras of two partitions coincide up to null sets.
    /// Both partitions are restricted to the support and compared there.
    pub fn synchronized_partitions(&self, p1: &Partition, p2: &Partition) -> Result<bool> {
        if p1.universe() != self.weights.len() || p2.universe() != self.weights.len() {
            return Err(Error::SchemaMismatch("partition over a different space".into()));
        }
        Ok(same_partition_on(self.weights.iter().map(|p| !p.is_zero()), p1, p2))
    }

    /// `ℋ_{S1} ≍ ℋ_{S2}` under this measure.
    pub fn synchronized(&self, s1: &CoordSet, s2: &CoordSet) -> Result<bool> {
        self.schema.check_coordset(s1)?;
        self.schema.check_coordset(s2)?;
        self.synchronized_partitions(&self.schema.atoms_of(s1), &self.schema.atoms_of(s2))
    }
}

/// True when the two partitions induce the same partition of the points
/// flagged in `support`.
pub(crate) fn same_partition_on(
    support: impl Iterator<Item = bool>,
    p1: &Partition,
    p2: &Partition,
) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    for (w, inside) in support.enumerate() {
        if !inside {
            continue;
        }
        let (b1, b2) = (p1.block_of(w), p2.block_of(w));
        if *fwd.entry(b1).or_insert(b2) != b2 || *back.entry(b2).or_insert(b1) != b1 {
            return false;
        }
    }
    true
}

/// A version of `P_𝒢(ω, ·)`: one conditional measure per atom of 𝒢.
///
/// Null atoms map to the unconditioned measure and are listed in `null_atoms`;
/// any choice there is a valid version.
#[derive(Debug, Clone)]
pub struct AtomConditional {
    pub partition: Partition,
    pub table: Vec<Measure>,
    pub null_atoms: Vec<usize>,
}

impl AtomConditional {
    /// `P_𝒢(ω, A)`.
    pub fn value(&self, omega: usize, a: &Event) -> Result<Prob> {
        self.table[self.partition.block_of(omega)].prob(a)
    }

    pub fn is_null_atom(&self, block: usize) -> bool {
        self.null_atoms.contains(&block)
    }
}
