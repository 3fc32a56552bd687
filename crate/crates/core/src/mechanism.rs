//! Causal kernels, mechanisms, interventions and the effect taxonomy.
//!
//! Kernels are partial: an entry may be absent for some `ω_S`, because worked
//! examples routinely specify only the kernel values they need. Every query
//! that touches an absent entry reports it instead of guessing, but a present
//! entry that already refutes a claim is reported first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::measure::{same_partition_on, Measure};
use crate::par;
use crate::rational::{format_rational, Prob};
use crate::space::{CoordSet, Event, Projector, SpaceSchema};

/// Largest number of missing kernel keys listed in a verdict.
pub const MISSING_LIST_CAP: usize = 64;

/// `K_S`: one measure on Ω per point of `Ω_S`, possibly with gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    schema: Arc<SpaceSchema>,
    on: CoordSet,
    proj: Projector,
    entries: Vec<Option<Measure>>,
}

impl Kernel {
    pub fn new(schema: &Arc<SpaceSchema>, on: CoordSet, entries: Vec<Option<Measure>>) -> Result<Self> {
        schema.check_coordset(&on)?;
        let proj = schema.projector(&on);
        if entries.len() != proj.size() {
            return Err(Error::Schema(format!(
                "kernel on {} needs {} entries, got {}",
                schema.format_coordset(&on),
                proj.size(),
                entries.len()
            )));
        }
        for m in entries.iter().flatten() {
            if !same_schema(m.schema(), schema) {
                return Err(Error::SchemaMismatch(format!(
                    "kernel on {} has an entry over a different space",
                    schema.format_coordset(&on)
                )));
            }
        }
        Ok(Kernel { schema: schema.clone(), on, proj, entries })
    }

    /// Builds a kernel entry by entry from projected indices of `Ω_S`.
    pub fn from_fn(
        schema: &Arc<SpaceSchema>,
        on: CoordSet,
        f: impl Fn(usize) -> Option<Measure> + Sync + Send,
    ) -> Result<Self> {
        schema.check_coordset(&on)?;
        let size = schema.projector(&on).size();
        Kernel::new(schema, on, par::map_range(size, f))
    }

    /// The kernel with every entry absent.
    pub fn empty(schema: &Arc<SpaceSchema>, on: CoordSet) -> Result<Self> {
        schema.check_coordset(&on)?;
        let size = schema.projector(&on).size();
        Kernel::new(schema, on, vec![None; size])
    }

    pub fn schema(&self) -> &Arc<SpaceSchema> {
        &self.schema
    }

    pub fn on(&self) -> &CoordSet {
        &self.on
    }

    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    /// `|Ω_S|`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, sub: usize) -> Option<&Measure> {
        self.entries[sub].as_ref()
    }

    pub fn entries(&self) -> &[Option<Measure>] {
        &self.entries
    }

    pub fn set_entry(&mut self, sub: usize, m: Option<Measure>) -> Result<()> {
        if let Some(m) = &m {
            if !same_schema(m.schema(), &self.schema) {
                return Err(Error::SchemaMismatch("kernel entry over a different space".into()));
            }
        }
        self.entries[sub] = m;
        Ok(())
    }

    pub fn present(&self) -> impl Iterator<Item = (usize, &Measure)> + '_ {
        self.entries.iter().enumerate().filter_map(|(i, m)| m.as_ref().map(|m| (i, m)))
    }

    pub fn is_total(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }

    pub fn missing_entries(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].is_none()).collect()
    }

    /// Index in `Ω_S` of the projection of a full outcome.
    pub fn index_of(&self, omega: usize) -> usize {
        self.proj.project(omega)
    }

    /// `K_S(ω_S, A)`, or `None` if the entry is absent.
    pub fn eval(&self, sub: usize, a: &Event) -> Option<Prob> {
        self.entries[sub].as_ref().map(|m| m.prob_unchecked(a))
    }

    /// `K_S(ω_S, A)` for every entry.
    pub fn eval_all(&self, a: &Event) -> Vec<Option<Prob>> {
        par::map_slice(&self.entries, |m| m.as_ref().map(|m| m.prob_unchecked(a)))
    }

    /// First outcome outside the fibre of `ω_S` that the entry charges.
    pub fn support_violation(&self, sub: usize) -> Option<(usize, Prob)> {
        let m = self.entries[sub].as_ref()?;
        m.weights()
            .iter()
            .enumerate()
            .find(|(w, p)| !p.is_zero() && self.proj.project(*w) != sub)
            .map(|(w, p)| (w, p.clone()))
    }

    /// Every entry conditioned on `G`; entries giving `G` zero mass become absent.
    pub fn conditioned(&self, g: &Event) -> Kernel {
        let entries = par::map_slice(&self.entries, |m| m.as_ref().and_then(|m| m.condition_event(g).ok()));
        Kernel { schema: self.schema.clone(), on: self.on.clone(), proj: self.proj.clone(), entries }
    }
}

pub(crate) fn same_schema(a: &Arc<SpaceSchema>, b: &Arc<SpaceSchema>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `Σ c_i μ_i` for weights summing to one.
pub(crate) fn mix<'a>(schema: &Arc<SpaceSchema>, terms: impl IntoIterator<Item = (&'a Prob, &'a Measure)>) -> Measure {
    let mut weights = vec![Prob::zero(); schema.size()];
    for (c, m) in terms {
        if c.is_zero() {
            continue;
        }
        for (w, x) in m.weights().iter().enumerate() {
            if !x.is_zero() {
                weights[w] += c * x;
            }
        }
    }
    Measure::from_parts(schema.clone(), weights)
}

/// A family `{K_S}` keyed by coordinate sets; `K_∅` is always present and total.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    schema: Arc<SpaceSchema>,
    kernels: BTreeMap<CoordSet, Kernel>,
}

impl Mechanism {
    /// The mechanism whose only kernel is `K_∅ = P`.
    pub fn new(p: &Measure) -> Self {
        let schema = p.schema().clone();
        let k0 = Kernel::new(&schema, CoordSet::empty(), vec![Some(p.clone())]).expect("valid K_∅");
        let mut kernels = BTreeMap::new();
        kernels.insert(CoordSet::empty(), k0);
        Mechanism { schema, kernels }
    }

    /// Adds or replaces a kernel, returning the previous one.
    pub fn insert(&mut self, k: Kernel) -> Result<Option<Kernel>> {
        if !same_schema(&k.schema, &self.schema) {
            return Err(Error::SchemaMismatch("kernel over a different space".into()));
        }
        if k.on.is_empty() && !k.is_total() {
            return Err(Error::Schema("K_∅ must have its single entry".into()));
        }
        Ok(self.kernels.insert(k.on.clone(), k))
    }

    pub fn schema(&self) -> &Arc<SpaceSchema> {
        &self.schema
    }

    pub fn get(&self, s: &CoordSet) -> Option<&Kernel> {
        self.kernels.get(s)
    }

    pub fn contains(&self, s: &CoordSet) -> bool {
        self.kernels.contains_key(s)
    }

    pub fn keys(&self) -> impl Iterator<Item = &CoordSet> + '_ {
        self.kernels.keys()
    }

    pub fn kernels(&self) -> impl Iterator<Item = &Kernel> + '_ {
        self.kernels.values()
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn empty_kernel(&self) -> &Measure {
        self.kernels[&CoordSet::empty()].entry(0).expect("K_∅ is total")
    }

    /// Removes a kernel; `K_∅` cannot be removed.
    pub fn remove(&mut self, s: &CoordSet) -> Option<Kernel> {
        if s.is_empty() {
            return None;
        }
        self.kernels.remove(s)
    }
}

/// An axiom violation, with a witness.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `K_∅ ≠ P`; `outcome` is the first outcome where they differ.
    EmptyKernel { outcome: usize, kernel: Prob, prob: Prob },
    /// `K_S(ω_S, ·)` charges an outcome outside the fibre of `ω_S`.
    Determinism { on: CoordSet, given: usize, outcome: usize, mass: Prob },
    /// The world marginal of `K_S(ω_S, ·)` differs from that of `K_{S∩T^j}`
    /// at the world atom `atom` (an index into the world's projection space).
    CrossWorld { world: String, on: CoordSet, given: usize, atom: usize, kernel: Prob, reference: Prob },
}

/// Kernel pairs the cross-world check could not compare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Uncheckable {
    pub world: String,
    pub on: CoordSet,
    pub needs: CoordSet,
    /// Present entries of `K_on` that could not be compared.
    pub entries: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AxiomReport {
    pub violations: Vec<Violation>,
    pub uncheckable: Vec<Uncheckable>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: AxiomReport) {
        self.violations.extend(other.violations);
        self.uncheckable.extend(other.uncheckable);
    }

    /// One human-readable line per violation and per uncheckable pair.
    pub fn describe(&self, schema: &SpaceSchema) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.violations {
            out.push(match v {
                Violation::EmptyKernel { outcome, kernel, prob } => format!(
                    "violation normalisation: K_{{}} differs from P at {}: {} vs {}",
                    schema.format_outcome(*outcome),
                    format_rational(kernel),
                    format_rational(prob)
                ),
                Violation::Determinism { on, given, outcome, mass } => format!(
                    "violation determinism: K_{}{} puts mass {} on {}",
                    schema.format_coordset(on),
                    schema.format_partial(on, *given),
                    format_rational(mass),
                    schema.format_outcome(*outcome)
                ),
                Violation::CrossWorld { world, on, given, atom, kernel, reference } => {
                    let tj = schema.world_coords(world);
                    format!(
                        "violation cross-world: world {} marginal of K_{}{} at {} is {}, K_{} gives {}",
                        world,
                        schema.format_coordset(on),
                        schema.format_partial(on, *given),
                        schema.format_partial(&tj, *atom),
                        format_rational(kernel),
                        schema.format_coordset(&on.intersection(&tj)),
                        format_rational(reference)
                    )
                }
            });
        }
        for u in &self.uncheckable {
            out.push(format!(
                "uncheckable cross-world: world {} for K_{} needs K_{} ({} entries)",
                u.world,
                schema.format_coordset(&u.on),
                schema.format_coordset(&u.needs),
                u.entries
            ));
        }
        out
    }
}

/// Outcome of a check that quantifies over kernel entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelCheck {
    Holds,
    /// Refuted at this entry of `Ω_U`.
    Fails { given: usize },
    /// No present entry refutes, but these entries are absent.
    Undetermined { missing: Vec<usize> },
}

impl KernelCheck {
    pub fn holds(&self) -> bool {
        matches!(self, KernelCheck::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, KernelCheck::Fails { .. })
    }

    /// Evaluates `pred` on the listed entries; the first refuting entry wins.
    fn over(k: &Kernel, entries: &[usize], pred: impl Fn(usize, &Measure) -> bool + Sync + Send) -> KernelCheck {
        let results = par::map_slice(entries, |&i| k.entry(i).map(|m| pred(i, m)));
        let mut missing = Vec::new();
        for (&i, r) in entries.iter().zip(results) {
            match r {
                Some(false) => return KernelCheck::Fails { given: i },
                None => missing.push(i),
                Some(true) => {}
            }
        }
        if missing.is_empty() {
            KernelCheck::Holds
        } else {
            KernelCheck::Undetermined { missing }
        }
    }
}

impl fmt::Display for KernelCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelCheck::Holds => write!(f, "true"),
            KernelCheck::Fails { .. } => write!(f, "false"),
            KernelCheck::Undetermined { missing } => write!(f, "undetermined ({} entries missing)", missing.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    NoEffect,
    Active,
    Dormant,
    Undetermined,
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectKind::NoEffect => "no-effect",
            EffectKind::Active => "active",
            EffectKind::Dormant => "dormant",
            EffectKind::Undetermined => "undetermined",
        })
    }
}

/// `K_on(given, A) = value` while `K_against(·, A) = against` at the projection.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectWitness {
    pub on: CoordSet,
    pub given: usize,
    pub value: Prob,
    pub against_on: CoordSet,
    pub against: Prob,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectVerdict {
    pub kind: EffectKind,
    pub witness: Option<EffectWitness>,
    /// Kernel keys, absent or partial, that blocked certification (capped).
    pub missing: Vec<CoordSet>,
    /// Pairs `(S, S∖U)` that could not be compared in full.
    pub unchecked_pairs: u128,
    /// Whether every comparable pair agreed.
    pub present_pairs_consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionalKind {
    Active,
    NoActiveEffect,
    Undetermined,
}

/// Per-entry comparison of `K_U(ω_U, ·)_G(A)` against `P_G(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEffect {
    pub kind: ConditionalKind,
    pub observational: Prob,
    /// `None` when the entry is absent or gives `G` zero mass.
    pub values: Vec<Option<Prob>>,
    pub witness: Option<usize>,
    pub missing: Vec<usize>,
    /// Entries with `K_U(ω_U, G) = 0`, where the conditional is undefined.
    pub undefined: Vec<usize>,
}

/// The space produced by an intervention, with a derivation report.
#[derive(Debug, Clone)]
pub struct Intervention {
    pub space: CausalSpace,
    /// Keys of the new mechanism.
    pub derived: Vec<CoordSet>,
    /// Keys of the old mechanism with no derivable counterpart.
    pub dropped: Vec<CoordSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalReport {
    /// `K'_U = K_U` entry by entry.
    pub kernel_preserved: KernelCheck,
    /// `K_U` is a version of the post-intervention conditional given `ℋ_U`.
    pub global_source: KernelCheck,
}

impl FundamentalReport {
    pub fn passes(&self) -> bool {
        self.kernel_preserved.holds() && self.global_source.holds()
    }
}

/// `(Ω, ℋ, P, 𝒦)`; worlds are read off the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalSpace {
    schema: Arc<SpaceSchema>,
    prob: Measure,
    mech: Mechanism,
}

impl CausalSpace {
    pub fn new(prob: Measure, mech: Mechanism) -> Result<Self> {
        if !same_schema(prob.schema(), mech.schema()) {
            return Err(Error::SchemaMismatch("measure and mechanism over different spaces".into()));
        }
        Ok(CausalSpace { schema: prob.schema().clone(), prob, mech })
    }

    /// A space with no kernels beyond `K_∅ = P`.
    pub fn observational(prob: Measure) -> Self {
        let mech = Mechanism::new(&prob);
        CausalSpace { schema: prob.schema().clone(), prob, mech }
    }

    pub fn schema(&self) -> &Arc<SpaceSchema> {
        &self.schema
    }

    pub fn prob(&self) -> &Measure {
        &self.prob
    }

    pub fn mechanism(&self) -> &Mechanism {
        &self.mech
    }

    pub fn mechanism_mut(&mut self) -> &mut Mechanism {
        &mut self.mech
    }

    pub fn kernel(&self, s: &CoordSet) -> Result<&Kernel> {
        self.mech
            .get(s)
            .ok_or_else(|| Error::MissingKernel(format!("K_{}", self.schema.format_coordset(s))))
    }

    pub(crate) fn check_event(&self, a: &Event) -> Result<()> {
        if a.universe() != self.schema.size() {
            return Err(Error::SchemaMismatch(format!(
                "event over {} outcomes, space has {}",
                a.universe(),
                self.schema.size()
            )));
        }
        Ok(())
    }

    /// Normalisation (`K_∅ = P`) and interventional determinism of every
    /// present entry. The finite form of determinism is the support
    /// condition: `K_S(ω_S, ·)` lives on the fibre of `ω_S`.
    pub fn check_axioms(&self) -> AxiomReport {
        let mut report = AxiomReport::default();
        let k0 = self.mech.empty_kernel();
        if let Some(w) = (0..self.schema.size()).find(|&w| k0.weight(w) != self.prob.weight(w)) {
            report.violations.push(Violation::EmptyKernel {
                outcome: w,
                kernel: k0.weight(w).clone(),
                prob: self.prob.weight(w).clone(),
            });
        }
        for k in self.mech.kernels() {
            let found = par::map_range(k.len(), |i| k.support_violation(i));
            for (given, v) in found.into_iter().enumerate() {
                if let Some((outcome, mass)) = v {
                    report.violations.push(Violation::Determinism { on: k.on.clone(), given, outcome, mass });
                }
            }
        }
        report
    }

    /// Point-mass intervention `do(U, δ_{ω_U})` for a projected index of `Ω_U`.
    pub fn intervene_point(&self, u: &CoordSet, given: usize) -> Result<Intervention> {
        let sub = Arc::new(self.schema.sub_schema(u));
        if given >= sub.size() {
            return Err(Error::Schema("intervention value out of range".into()));
        }
        self.intervene(u, &Measure::dirac(sub, given))
    }

    /// `do(U, Q)` for a measure `Q` on `Ω_U`.
    ///
    /// The new measure is `Σ Q(ω_U) K_U(ω_U, ·)`. For every key `K ⊇ U` the
    /// kernels on `S = (K∖U) ∪ W`, `W ⊆ U`, are derived by averaging
    /// `K_{S∪U}` over the `U∖S` marginal of `Q`. Kernels whose `S∪U` is not
    /// a key are dropped and reported.
    pub fn intervene(&self, u: &CoordSet, q: &Measure) -> Result<Intervention> {
        self.schema.check_coordset(u)?;
        let sub = self.schema.sub_schema(u);
        if q.schema().coords() != sub.coords() {
            return Err(Error::SchemaMismatch(format!(
                "intervention measure is not over {}",
                self.schema.format_coordset(u)
            )));
        }
        let ku = self.kernel(u)?;
        let mut terms = Vec::new();
        for (i, qi) in q.weights().iter().enumerate() {
            if qi.is_zero() {
                continue;
            }
            match ku.entry(i) {
                Some(m) => terms.push((qi, m)),
                None => {
                    return Err(Error::MissingKernel(format!(
                        "K_{} at {}",
                        self.schema.format_coordset(u),
                        self.schema.format_partial(u, i)
                    )))
                }
            }
        }
        let prob = mix(&self.schema, terms);

        let mut kernels = BTreeMap::new();
        for key in self.mech.keys().filter(|k| u.is_subset(k)) {
            let base = &self.mech.kernels[key];
            let r = key.difference(u);
            for w in u.subsets() {
                let s = r.union(&w);
                let k = self.derive_kernel(base, u, q, &s)?;
                kernels.insert(s, k);
            }
        }
        let derived: Vec<CoordSet> = kernels.keys().cloned().collect();
        let dropped = self.mech.keys().filter(|k| !kernels.contains_key(*k)).cloned().collect();
        let mut mech = Mechanism { schema: self.schema.clone(), kernels };
        // K'_∅ = P' by construction; store the same value to avoid drift in representation.
        mech.kernels.insert(
            CoordSet::empty(),
            Kernel::new(&self.schema, CoordSet::empty(), vec![Some(prob.clone())])?,
        );
        Ok(Intervention { space: CausalSpace { schema: self.schema.clone(), prob, mech }, derived, dropped })
    }

    /// `K'_S(ω_S, ·) = Σ_{v ∈ Ω_{U∖S}} Q(v) K_{S∪U}((ω_S, v), ·)`.
    fn derive_kernel(&self, base: &Kernel, u: &CoordSet, q: &Measure, s: &CoordSet) -> Result<Kernel> {
        let v_set = u.difference(s);
        let positions = CoordSet::new(v_set.iter().map(|c| u.position(c).expect("subset of U")));
        let q_marg = q.marginal(&positions);
        let proj_s = self.schema.projector(s);
        let proj_v = self.schema.projector(&v_set);
        let proj_k = base.projector();
        let schema = &self.schema;
        Kernel::from_fn(schema, s.clone(), |si| {
            let mut terms = Vec::new();
            for (vi, qv) in q_marg.weights().iter().enumerate() {
                if qv.is_zero() {
                    continue;
                }
                let ki = proj_k.encode_with(|c| {
                    if s.contains(c) {
                        proj_s.label_in(si, c)
                    } else {
                        proj_v.label_in(vi, c)
                    }
                });
                terms.push((qv, base.entry(ki)?));
            }
            Some(mix(schema, terms))
        })
    }

    /// Classifies the effect of `ℋ_U` on `A`.
    ///
    /// Active when some `K_U(ω_U, A) ≠ P(A)`; dormant when not active but
    /// some pair `K_S`, `K_{S∖U}` disagrees on `A`; no effect when every such
    /// pair over all `S ⊆ T` is present and agrees. Effects are quantified
    /// over all of Ω, including null outcomes.
    pub fn classify_effect(&self, u: &CoordSet, a: &Event) -> Result<EffectVerdict> {
        self.check_event(a)?;
        self.schema.check_coordset(u)?;
        let p_a = self.prob.prob_unchecked(a);
        let mut missing: BTreeSet<CoordSet> = BTreeSet::new();

        let (active, ku_total) = match self.mech.get(u) {
            None => {
                missing.insert(u.clone());
                (None, false)
            }
            Some(ku) => {
                let vals = ku.eval_all(a);
                let w = vals.iter().enumerate().find_map(|(i, v)| match v {
                    Some(v) if *v != p_a => Some(EffectWitness {
                        on: u.clone(),
                        given: i,
                        value: v.clone(),
                        against_on: CoordSet::empty(),
                        against: p_a.clone(),
                    }),
                    _ => None,
                });
                if !ku.is_total() {
                    missing.insert(u.clone());
                }
                (w, ku.is_total())
            }
        };

        // Pairs (S, S∖U) with S∩U ≠ ∅ among present keys.
        let mut dormant = None;
        let mut complete_pairs: u128 = 0;
        for (s, ks) in &self.mech.kernels {
            if s.intersection(u).is_empty() {
                continue;
            }
            let r = s.difference(u);
            let Some(kr) = self.mech.get(&r) else {
                continue;
            };
            let vs = ks.eval_all(a);
            let vr = kr.eval_all(a);
            let proj_r = self.schema.projector(&r);
            let proj_s = ks.projector();
            let mut complete = true;
            for (si, v) in vs.iter().enumerate() {
                let ri = proj_r.encode_with(|c| proj_s.label_in(si, c));
                match (v, &vr[ri]) {
                    (Some(x), Some(y)) => {
                        if x != y && dormant.is_none() {
                            dormant = Some(EffectWitness {
                                on: s.clone(),
                                given: si,
                                value: x.clone(),
                                against_on: r.clone(),
                                against: y.clone(),
                            });
                        }
                    }
                    _ => complete = false,
                }
            }
            if complete {
                complete_pairs += 1;
            }
        }
        let n = self.schema.num_coords() as u32;
        let all_pairs = pow2(n).saturating_sub(pow2(n - u.len() as u32));
        let unchecked_pairs = all_pairs.saturating_sub(complete_pairs);
        if unchecked_pairs > 0 {
            self.collect_missing(u, &mut missing);
        }
        let present_pairs_consistent = dormant.is_none();

        let (kind, witness) = if active.is_some() {
            (EffectKind::Active, active)
        } else if !ku_total {
            (EffectKind::Undetermined, None)
        } else if dormant.is_some() {
            (EffectKind::Dormant, dormant)
        } else if unchecked_pairs == 0 {
            (EffectKind::NoEffect, None)
        } else {
            (EffectKind::Undetermined, None)
        };
        Ok(EffectVerdict {
            kind,
            witness,
            missing: missing.into_iter().take(MISSING_LIST_CAP).collect(),
            unchecked_pairs,
            present_pairs_consistent,
        })
    }

    /// Lists keys of incomplete pairs `(S, S∖U)`, stopping at the cap.
    fn collect_missing(&self, u: &CoordSet, missing: &mut BTreeSet<CoordSet>) {
        let n = self.schema.num_coords().min(63);
        let usable = |s: &CoordSet| self.mech.get(s).is_some_and(Kernel::is_total);
        for mask in 1u64..(1u64 << n) {
            if missing.len() >= MISSING_LIST_CAP {
                return;
            }
            let s = CoordSet::new((0..n).filter(|b| mask >> b & 1 == 1));
            if s.intersection(u).is_empty() {
                continue;
            }
            let r = s.difference(u);
            if !usable(&s) {
                missing.insert(s);
            }
            if !usable(&r) {
                missing.insert(r);
            }
        }
    }

    /// Compares `K_U(ω_U, ·)_G(A)` with `P_G(A)` for every `ω_U`.
    pub fn conditional_active_effect(&self, u: &CoordSet, a: &Event, g: &Event) -> Result<ConditionalEffect> {
        self.check_event(a)?;
        self.check_event(g)?;
        let observational = self.prob.conditional(a, g)?;
        let ku = self.kernel(u)?;
        let ag = a.intersection(g);
        let rows = par::map_slice(ku.entries(), |m| {
            m.as_ref().map(|m| {
                let mg = m.prob_unchecked(g);
                if mg.is_zero() {
                    None
                } else {
                    Some(m.prob_unchecked(&ag) / mg)
                }
            })
        });
        let mut values = Vec::with_capacity(rows.len());
        let (mut missing, mut undefined, mut witness) = (Vec::new(), Vec::new(), None);
        for (i, r) in rows.into_iter().enumerate() {
            match r {
                None => {
                    missing.push(i);
                    values.push(None);
                }
                Some(None) => {
                    undefined.push(i);
                    values.push(None);
                }
                Some(Some(v)) => {
                    if witness.is_none() && v != observational {
                        witness = Some(i);
                    }
                    values.push(Some(v));
                }
            }
        }
        let kind = if witness.is_some() {
            ConditionalKind::Active
        } else if missing.is_empty() {
            ConditionalKind::NoActiveEffect
        } else {
            ConditionalKind::Undetermined
        };
        Ok(ConditionalEffect { kind, observational, values, witness, missing, undefined })
    }

    fn all_entries(&self, u: &CoordSet) -> Result<(&Kernel, Vec<usize>)> {
        let k = self.kernel(u)?;
        Ok((k, (0..k.len()).collect()))
    }

    /// `K_U(ω_U, A∩B) = K_U(ω_U, A) K_U(ω_U, B)` for every `ω_U`.
    pub fn causal_independent(&self, u: &CoordSet, a: &Event, b: &Event) -> Result<KernelCheck> {
        self.check_event(a)?;
        self.check_event(b)?;
        let (k, all) = self.all_entries(u)?;
        let ab = a.intersection(b);
        Ok(KernelCheck::over(k, &all, |_, m| {
            m.prob_unchecked(&ab) == m.prob_unchecked(a) * m.prob_unchecked(b)
        }))
    }

    /// `ℋ_{S1}` and `ℋ_{S2}` independent under every `K_U(ω_U, ·)`.
    pub fn causal_independent_sigmas(&self, u: &CoordSet, s1: &CoordSet, s2: &CoordSet) -> Result<KernelCheck> {
        self.schema.check_coordset(s1)?;
        self.schema.check_coordset(s2)?;
        let (k, all) = self.all_entries(u)?;
        let (p1, p2) = (self.schema.atoms_of(s1), self.schema.atoms_of(s2));
        Ok(KernelCheck::over(k, &all, |_, m| {
            m.independent_partitions(&p1, &p2).expect("same space")
        }))
    }

    /// `K_U(ω_U, A Δ B) = 0` for every `ω_U`.
    pub fn causally_equal(&self, u: &CoordSet, a: &Event, b: &Event) -> Result<KernelCheck> {
        self.check_event(a)?;
        self.check_event(b)?;
        let (k, all) = self.all_entries(u)?;
        let d = a.symmetric_difference(b);
        Ok(KernelCheck::over(k, &all, |_, m| m.prob_unchecked(&d).is_zero()))
    }

    /// `ℋ_{S1}` and `ℋ_{S2}` synchronised under every `K_U(ω_U, ·)`.
    pub fn causally_synchronized(&self, u: &CoordSet, s1: &CoordSet, s2: &CoordSet) -> Result<KernelCheck> {
        self.schema.check_coordset(s1)?;
        self.schema.check_coordset(s2)?;
        let (k, all) = self.all_entries(u)?;
        let (p1, p2) = (self.schema.atoms_of(s1), self.schema.atoms_of(s2));
        Ok(KernelCheck::over(k, &all, |_, m| {
            same_partition_on(m.weights().iter().map(|p| !p.is_zero()), &p1, &p2)
        }))
    }

    /// Atoms of `ℋ_U` with positive probability, as indices of `Ω_U`.
    fn positive_atoms(&self, u: &CoordSet) -> (Measure, Vec<usize>) {
        let marg = self.prob.marginal(u);
        let pos = (0..marg.weights().len()).filter(|&i| !marg.weight(i).is_zero()).collect();
        (marg, pos)
    }

    /// Whether `K_U(ω_U, A) = P(A | ℋ_U)(ω)` on every positive atom.
    pub fn is_source_of_event(&self, u: &CoordSet, a: &Event) -> Result<KernelCheck> {
        self.check_event(a)?;
        self.schema.check_coordset(u)?;
        let k = self.kernel(u)?;
        let (marg, pos) = self.positive_atoms(u);
        Ok(KernelCheck::over(k, &pos, |i, m| {
            let atom_a: Prob = a.iter().filter(|&w| k.index_of(w) == i).map(|w| self.prob.weight(w)).sum();
            m.prob_unchecked(a) == atom_a / marg.weight(i)
        }))
    }

    /// Whether `ℋ_U` is a source of `ℋ_S`: the `S`-marginals of `K_U(ω_U, ·)`
    /// and of `P(· | ℋ_U)` agree on every positive atom.
    pub fn is_source_of(&self, u: &CoordSet, s: &CoordSet) -> Result<KernelCheck> {
        self.schema.check_coordset(s)?;
        let k = self.kernel(u)?;
        let (marg, pos) = self.positive_atoms(u);
        // Joint law of (U, S) coordinates under P.
        let us = u.union(s);
        let joint = self.prob.marginal(&us);
        let proj_us = self.schema.projector(&us);
        let proj_s = self.schema.projector(s);
        Ok(KernelCheck::over(k, &pos, |i, m| {
            let ms = m.marginal(s);
            let pu = marg.weight(i);
            (0..proj_s.size()).all(|j| {
                let u_label = |c: usize| k.projector().label_in(i, c);
                // A coordinate in both U and S must carry the same label.
                let consistent = s.iter().all(|c| !u.contains(c) || proj_s.label_in(j, c) == u_label(c));
                let cond = if consistent {
                    let idx = proj_us.encode_with(|c| if u.contains(c) { u_label(c) } else { proj_s.label_in(j, c) });
                    joint.weight(idx) / pu
                } else {
                    Prob::zero()
                };
                *ms.weight(j) == cond
            })
        }))
    }

    /// `ℋ_U` is a source of every event.
    pub fn is_global_source(&self, u: &CoordSet) -> Result<KernelCheck> {
        let k = self.kernel(u)?;
        let (marg, pos) = self.positive_atoms(u);
        Ok(KernelCheck::over(k, &pos, |i, m| {
            let pu = marg.weight(i);
            (0..self.schema.size()).all(|w| {
                let cond = if k.index_of(w) == i { self.prob.weight(w) / pu } else { Prob::zero() };
                *m.weight(w) == cond
            })
        }))
    }

    /// After `do(U, Q)`: `K'_U = K_U`, and `ℋ_U` is a global source.
    pub fn verify_fundamental(&self, u: &CoordSet, q: &Measure) -> Result<FundamentalReport> {
        let after = self.intervene(u, q)?.space;
        let before = self.kernel(u)?;
        let now = after.kernel(u)?;
        let all: Vec<usize> = (0..before.len()).collect();
        let kernel_preserved = KernelCheck::over(before, &all, |i, m| now.entry(i) == Some(m));
        let global_source = after.is_global_source(u)?;
        Ok(FundamentalReport { kernel_preserved, global_source })
    }
}

fn pow2(n: u32) -> u128 {
    1u128.checked_shl(n).unwrap_or(u128::MAX)
}
