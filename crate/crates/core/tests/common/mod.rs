//! Random space generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use cfspace::rational::{int, ratio};
use cfspace::{CausalSpace, CoordSet, Coordinate, Event, Kernel, Measure, Mechanism, Partition, Prob, SpaceSchema};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORLD_NAMES: [&str; 3] = ["F", "CF", "W3"];

/// A schema from per-world arities.
pub fn schema(worlds: &[Vec<usize>]) -> Arc<SpaceSchema> {
    let mut coords = Vec::new();
    for (j, arities) in worlds.iter().enumerate() {
        for (k, &a) in arities.iter().enumerate() {
            let labels: Vec<String> = (0..a).map(|l| l.to_string()).collect();
            coords.push(Coordinate::new(WORLD_NAMES[j], format!("v{k}"), labels).unwrap());
        }
    }
    Arc::new(SpaceSchema::new(coords).unwrap())
}

/// Random world layout with at most `max_outcomes` outcomes and at most
/// `max_coords` coordinates.
pub fn random_shape(rng: &mut TestRng, worlds: usize, max_outcomes: usize, max_coords: usize) -> Vec<Vec<usize>> {
    loop {
        let mut shape: Vec<Vec<usize>> = (0..worlds).map(|_| vec![rng.gen_range(2..=3)]).collect();
        let mut size: usize = shape.iter().flatten().product();
        let mut n = worlds;
        while n < max_coords && rng.gen_bool(0.4) {
            let a = rng.gen_range(2..=3);
            if size * a > max_outcomes {
                break;
            }
            let j = rng.gen_range(0..worlds);
            shape[j].push(a);
            size *= a;
            n += 1;
        }
        if size <= max_outcomes {
            return shape;
        }
    }
}

/// Small random integer weights normalised to a probability vector. Zeros
/// appear with probability `zeros`; at least one weight is positive.
pub fn random_law(rng: &mut TestRng, n: usize, zeros: f64) -> Vec<Prob> {
    let mut w: Vec<i64> = (0..n).map(|_| if rng.gen_bool(zeros) { 0 } else { rng.gen_range(1..=4) }).collect();
    if w.iter().all(|&x| x == 0) {
        w[rng.gen_range(0..n)] = 1;
    }
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| ratio(x, total)).collect()
}

fn local_index(labels: &[usize], coords: &[usize], schema: &SpaceSchema) -> usize {
    coords.iter().fold(0, |acc, &c| acc * schema.coord(c).arity() + labels[c])
}

/// A valid counterfactual causal space with a full mechanism.
///
/// Worlds are conditionally independent given a hidden variable `z` that
/// no intervention touches. For every world `j` and every `S_j ⊆ T^j` a
/// world-local law `Q_j[S_j][z][s_j]` concentrated on the fibre of `s_j` is
/// drawn, and `K_S(s) = Σ_z π(z) ⊗_j Q_j[S ∩ T^j][z][s_j]`. Each world's
/// marginal then depends on `S ∩ T^j` only, so the cross-world condition
/// holds by construction. With a single `z` the worlds are causally
/// independent on every kernel.
pub fn latent_space(rng: &mut TestRng, schema: &Arc<SpaceSchema>, latent: usize, zeros: f64) -> CausalSpace {
    build_latent(rng, schema, latent, zeros, false)
}

/// Like [`latent_space`], but world `CF` reuses the laws of `F`, so the space
/// is symmetric under swapping them. The two worlds must have equal shapes.
pub fn mirrored_latent_space(rng: &mut TestRng, schema: &Arc<SpaceSchema>, latent: usize, zeros: f64) -> CausalSpace {
    build_latent(rng, schema, latent, zeros, true)
}

/// `[z][s_j]`: a law over a world's local outcomes.
type LawsByLatent = Vec<Vec<Vec<Prob>>>;

fn build_latent(rng: &mut TestRng, schema: &Arc<SpaceSchema>, latent: usize, zeros: f64, mirrored: bool) -> CausalSpace {
    let worlds: Vec<CoordSet> = schema.worlds().iter().map(|w| schema.world_coords(w)).collect();
    let pi = random_law(rng, latent, 0.0);
    let decoded: Vec<Vec<usize>> = (0..schema.size()).map(|w| schema.decode(w).0).collect();

    // q[j][subset position][z][s_j] = weights over the local outcomes of world j.
    let mut q: Vec<Vec<(CoordSet, LawsByLatent)>> = Vec::new();
    for (j, wc) in worlds.iter().enumerate() {
        if mirrored && j == 1 {
            let copy = wc.subsets().zip(&q[0]).map(|(sj, (_, laws))| (sj, laws.clone())).collect();
            q.push(copy);
            continue;
        }
        let local: usize = wc.iter().map(|c| schema.coord(c).arity()).product();
        let local_labels: Vec<Vec<usize>> = (0..local)
            .map(|l| {
                let mut labels = vec![0; schema.num_coords()];
                let mut rest = l;
                for c in wc.as_slice().iter().rev() {
                    labels[*c] = rest % schema.coord(*c).arity();
                    rest /= schema.coord(*c).arity();
                }
                labels
            })
            .collect();
        let mut per_subset = Vec::new();
        for sj in wc.subsets() {
            let proj = schema.projector(&sj);
            let by_z = (0..latent)
                .map(|_| {
                    (0..proj.size())
                        .map(|s| {
                            let fibre: Vec<usize> = (0..local)
                                .filter(|&l| sj.iter().all(|c| local_labels[l][c] == proj.label_in(s, c)))
                                .collect();
                            let law = random_law(rng, fibre.len(), zeros);
                            let mut w = vec![Prob::zero(); local];
                            for (l, p) in fibre.into_iter().zip(law) {
                                w[l] = p;
                            }
                            w
                        })
                        .collect()
                })
                .collect();
            per_subset.push((sj, by_z));
        }
        q.push(per_subset);
    }

    let entry = |s: &CoordSet, sub: usize| -> Measure {
        let proj = schema.projector(s);
        let parts: Vec<(usize, usize)> = worlds
            .iter()
            .enumerate()
            .map(|(j, wc)| {
                let sj = s.intersection(wc);
                let pos = q[j].iter().position(|(x, _)| *x == sj).unwrap();
                let pj = schema.projector(&sj);
                (pos, pj.encode_with(|c| proj.label_in(sub, c)))
            })
            .collect();
        let weights = (0..schema.size())
            .map(|w| {
                let mut total = Prob::zero();
                for (z, pz) in pi.iter().enumerate() {
                    let mut term = pz.clone();
                    for (j, wc) in worlds.iter().enumerate() {
                        let (pos, sj) = parts[j];
                        let l = local_index(&decoded[w], wc.as_slice(), schema);
                        term *= &q[j][pos].1[z][sj][l];
                        if term.is_zero() {
                            break;
                        }
                    }
                    total += term;
                }
                total
            })
            .collect();
        Measure::new(schema.clone(), weights).unwrap()
    };

    let prob = entry(&CoordSet::empty(), 0);
    let mut mech = Mechanism::new(&prob);
    for s in schema.all_coords().subsets().filter(|s| !s.is_empty()) {
        let size = schema.projector(&s).size();
        let k = Kernel::new(schema, s.clone(), (0..size).map(|i| Some(entry(&s, i))).collect()).unwrap();
        mech.insert(k).unwrap();
    }
    CausalSpace::new(prob, mech).unwrap()
}

/// A random valid space: shape, latent size and zero density drawn from `rng`.
pub fn random_space(rng: &mut TestRng, max_outcomes: usize) -> CausalSpace {
    let worlds = if rng.gen_bool(0.15) { 3 } else { 2 };
    let shape = random_shape(rng, worlds, max_outcomes, 4);
    let latent = rng.gen_range(1..=3);
    let zeros = if rng.gen_bool(0.5) { 0.0 } else { 0.3 };
    latent_space(rng, &schema(&shape), latent, zeros)
}

/// Removes random kernels (never `K_∅`) and random entries of the rest.
pub fn thin_out(rng: &mut TestRng, space: &CausalSpace, keep: f64) -> CausalSpace {
    let mut s = space.clone();
    let keys: Vec<CoordSet> = s.mechanism().keys().filter(|k| !k.is_empty()).cloned().collect();
    for k in keys {
        if !rng.gen_bool(keep) {
            s.mechanism_mut().remove(&k);
        } else if rng.gen_bool(0.2) {
            let mut kernel = s.mechanism().get(&k).unwrap().clone();
            let i = rng.gen_range(0..kernel.len());
            kernel.set_entry(i, None).unwrap();
            s.mechanism_mut().insert(kernel).unwrap();
        }
    }
    s
}

pub fn random_event(rng: &mut TestRng, n: usize) -> Event {
    Event::from_predicate(n, |_| rng.gen_bool(0.5))
}

pub fn random_nonempty_subset(rng: &mut TestRng, all: &CoordSet) -> CoordSet {
    loop {
        let s = CoordSet::new(all.iter().filter(|_| rng.gen_bool(0.5)));
        if !s.is_empty() {
            return s;
        }
    }
}

pub fn random_subset_of(rng: &mut TestRng, all: &CoordSet) -> CoordSet {
    CoordSet::new(all.iter().filter(|_| rng.gen_bool(0.5)))
}

/// An event in `ℋ_S`: a random union of fibres.
pub fn random_measurable(rng: &mut TestRng, schema: &SpaceSchema, s: &CoordSet) -> Event {
    let proj = schema.projector(s);
    let chosen: Vec<bool> = (0..proj.size()).map(|_| rng.gen_bool(0.5)).collect();
    Event::from_predicate(schema.size(), |w| chosen[proj.project(w)])
}

/// A random law on `Ω_U`, as a measure over the sub-schema.
pub fn random_q(rng: &mut TestRng, schema: &SpaceSchema, u: &CoordSet) -> Measure {
    let sub = Arc::new(schema.sub_schema(u));
    let w = random_law(rng, sub.size(), 0.3);
    Measure::new(sub, w).unwrap()
}

/// The product of the marginals of `q` on two disjoint position sets
/// covering `Ω_U`.
pub fn product_of_marginals(q: &Measure, left: &CoordSet, right: &CoordSet) -> Measure {
    let schema = q.schema();
    let ml = q.marginal(left);
    let mr = q.marginal(right);
    let pl = schema.projector(left);
    let pr = schema.projector(right);
    let w = (0..schema.size()).map(|i| ml.weight(pl.project(i)) * mr.weight(pr.project(i))).collect();
    Measure::new(schema.clone(), w).unwrap()
}

// ---- brute-force oracles ----

/// Every event of a universe of at most 16 outcomes.
pub fn all_events(n: usize) -> impl Iterator<Item = Event> {
    assert!(n <= 16);
    (0u64..(1u64 << n)).map(move |m| Event::from_mask(n, m))
}

/// Every event of `σ(partition)`: unions of blocks.
pub fn sigma_events(p: &Partition) -> Vec<Event> {
    let blocks = p.blocks();
    assert!(blocks.len() <= 16);
    (0u32..(1u32 << blocks.len()))
        .map(|m| {
            let mut e = Event::empty(p.universe());
            for (b, block) in blocks.iter().enumerate() {
                if m >> b & 1 == 1 {
                    e = e.union(block);
                }
            }
            e
        })
        .collect()
}

pub fn weight(m: &Measure, a: &Event) -> Prob {
    a.iter().map(|w| m.weight(w).clone()).sum()
}

/// Weights scaled to integers by the lcm of their denominators, with the
/// scale. Lets the oracles sum events without rational arithmetic.
pub fn scaled(weights: &[Prob]) -> (Vec<u128>, u128) {
    let d = weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let ints = weights.iter().map(|w| (w.numer() * (&d / w.denom())).to_u128().unwrap()).collect();
    (ints, d.to_u128().expect("scale fits in u128"))
}

/// Weight of every union of blocks, indexed by block mask.
fn union_weights(block_weights: &[u128]) -> Vec<u128> {
    let mut w = vec![0u128; 1 << block_weights.len()];
    for mask in 1..w.len() {
        let low = mask.trailing_zeros() as usize;
        w[mask] = w[mask & (mask - 1)] + block_weights[low];
    }
    w
}

fn block_weights(weights: &[u128], p: &Partition) -> Vec<u128> {
    let mut b = vec![0u128; p.num_blocks()];
    for (w, x) in weights.iter().enumerate() {
        b[p.block_of(w)] += x;
    }
    b
}

/// Determinism by quantifying over every `A ∈ ℋ_S` and every `ω` in the
/// fibre: `K_S(ω_S, A) = 1_A(ω)`. Returns the failing entry indices.
pub fn brute_determinism_failures(schema: &SpaceSchema, k: &Kernel) -> Vec<usize> {
    let atoms = schema.atoms_of(k.on());
    assert!(atoms.num_blocks() <= 16);
    let proj = k.projector();
    let mut out = Vec::new();
    for (i, m) in k.entries().iter().enumerate() {
        let Some(m) = m else { continue };
        let (ints, d) = scaled(m.weights());
        let events = union_weights(&block_weights(&ints, &atoms));
        let fibre: Vec<usize> = (0..schema.size()).filter(|&w| proj.project(w) == i).collect();
        let ok = events.iter().enumerate().all(|(mask, &v)| {
            fibre.iter().all(|&w| v == if mask >> atoms.block_of(w) & 1 == 1 { d } else { 0 })
        });
        if !ok {
            out.push(i);
        }
    }
    out
}

/// Event pairs beyond this many are sampled instead of enumerated.
pub const EXHAUSTIVE_PAIRS: usize = 1 << 16;

/// Joint block weights `P(A_i ∩ B_j)` of two partitions, scaled.
struct Joint {
    d: u128,
    cells: Vec<Vec<u128>>,
    left: Vec<u128>,
    right: Vec<u128>,
}

impl Joint {
    fn new(m: &Measure, p1: &Partition, p2: &Partition) -> Joint {
        let (ints, d) = scaled(m.weights());
        let mut cells = vec![vec![0u128; p2.num_blocks()]; p1.num_blocks()];
        for (w, x) in ints.iter().enumerate() {
            cells[p1.block_of(w)][p2.block_of(w)] += x;
        }
        Joint { d, cells, left: union_weights(&block_weights(&ints, p1)), right: union_weights(&block_weights(&ints, p2)) }
    }

    fn pairs(&self) -> usize {
        self.left.len().saturating_mul(self.right.len())
    }

    /// `P(A ∩ B)` for every `B`, with `A` fixed by its block mask.
    fn row(&self, a: usize) -> Vec<u128> {
        let col: Vec<u128> = (0..self.cells[0].len())
            .map(|j| (0..self.cells.len()).filter(|i| a >> i & 1 == 1).map(|i| self.cells[i][j]).sum())
            .collect();
        union_weights(&col)
    }

    fn transpose(&self) -> Joint {
        let cells = (0..self.cells[0].len()).map(|j| self.cells.iter().map(|r| r[j]).collect()).collect();
        Joint { d: self.d, cells, left: self.right.clone(), right: self.left.clone() }
    }
}

fn sample_masks(rng: &mut TestRng, len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        (0..len).collect()
    } else {
        (0..count).map(|_| rng.gen_range(0..len)).collect()
    }
}

/// `P(A ∩ B) = P(A) P(B)` for every `A ∈ σ(p1)`, `B ∈ σ(p2)`. Above
/// [`EXHAUSTIVE_PAIRS`] the `A` side is sampled with a fixed seed.
pub fn brute_independent(m: &Measure, p1: &Partition, p2: &Partition) -> bool {
    let j = Joint::new(m, p1, p2);
    let count = (EXHAUSTIVE_PAIRS / j.right.len()).max(16);
    let masks = sample_masks(&mut rng(0x1de9), j.left.len(), count);
    masks.into_iter().all(|a| {
        let row = j.row(a);
        row.iter().zip(&j.right).all(|(&ab, &b)| {
            ab.checked_mul(j.d).unwrap() == j.left[a].checked_mul(b).unwrap()
        })
    })
}

fn covered(j: &Joint, rng: &mut TestRng) -> bool {
    let count = (EXHAUSTIVE_PAIRS / j.right.len()).max(16);
    sample_masks(rng, j.left.len(), count).into_iter().all(|a| {
        let row = j.row(a);
        // P(A Δ B) = P(A) + P(B) - 2 P(A ∩ B)
        row.iter().zip(&j.right).any(|(&ab, &b)| j.left[a] + b == 2 * ab)
    })
}

/// Every event of either σ-algebra has an almost-surely equal event in the
/// other, by search over the other side. Sampled like [`brute_independent`].
pub fn brute_synchronized(m: &Measure, p1: &Partition, p2: &Partition) -> bool {
    let j = Joint::new(m, p1, p2);
    let mut r = rng(0x5c);
    covered(&j, &mut r) && covered(&j.transpose(), &mut r)
}

/// `P(· | G)` computed directly from weights.
pub fn brute_conditional(m: &Measure, a: &Event, g: &Event) -> Option<Prob> {
    let pg = weight(m, g);
    if pg.is_zero() {
        None
    } else {
        Some(weight(m, &a.intersection(g)) / pg)
    }
}

/// The intervened measure `Σ_u Q(u) K_U(u, ·)` computed entry by entry.
pub fn brute_intervened_measure(space: &CausalSpace, u: &CoordSet, q: &Measure) -> Vec<Prob> {
    let k = space.kernel(u).unwrap();
    let n = space.schema().size();
    let mut w = vec![Prob::zero(); n];
    for (i, qi) in q.weights().iter().enumerate() {
        if qi.is_zero() {
            continue;
        }
        let e = k.entry(i).unwrap();
        for (x, slot) in w.iter_mut().enumerate() {
            *slot += qi * e.weight(x);
        }
    }
    w
}

/// Moves mass `1/2` of a kernel entry to a uniformly chosen outcome, which
/// breaks determinism whenever that outcome lies outside the fibre.
pub fn perturb_entry(rng: &mut TestRng, k: &Kernel) -> Kernel {
    let mut k = k.clone();
    let present: Vec<usize> = k.present().map(|(i, _)| i).collect();
    let Some(&i) = present.choose(rng) else { return k };
    let m = k.entry(i).unwrap().clone();
    let n = m.schema().size();
    let target = rng.gen_range(0..n);
    let half = ratio(1, 2);
    let w: Vec<Prob> = (0..n)
        .map(|x| m.weight(x) * &half + if x == target { half.clone() } else { int(0) })
        .collect();
    k.set_entry(i, Some(Measure::new(m.schema().clone(), w).unwrap())).unwrap();
    k
}
