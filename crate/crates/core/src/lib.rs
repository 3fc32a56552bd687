//! Exact-rational engine for finite counterfactual probability spaces and
//! counterfactual causal spaces.
//!
//! Outcomes of a [`SpaceSchema`] are indexed row-major, first coordinate
//! slowest. All probabilities are [`Prob`] (arbitrary precision rationals), so
//! every axiom check is an exact equality.

pub mod compile;
pub mod counterfactual;
pub mod dsl;
pub mod error;
pub mod measure;
pub mod mechanism;
pub mod par;
pub mod rational;
pub mod repro;
pub mod space;

pub use counterfactual::{build_nway, EventClass, SymmetryReport, WorldMirror, WorldSpec};
pub use error::{Error, Result};
pub use measure::{AtomConditional, Measure};
pub use mechanism::{
    AxiomReport, CausalSpace, ConditionalEffect, ConditionalKind, EffectKind, EffectVerdict, EffectWitness,
    FundamentalReport, Intervention, Kernel, KernelCheck, Mechanism, Uncheckable, Violation,
};
pub use rational::Prob;
pub use space::{CoordSet, Coordinate, Event, Outcome, PartialOutcome, Partition, Projector, SpaceSchema};
