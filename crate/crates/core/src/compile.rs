//! Compilation of structural causal models, backtracking SCMs and
//! potential-outcome models into explicit spaces.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use petgraph::algo::toposort;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::mechanism::{CausalSpace, Kernel, Mechanism};
use crate::rational::{format_rational, Prob};
use crate::space::{CoordSet, Coordinate, SpaceSchema};

/// Full mechanisms are emitted only up to this many kernels.
pub const KERNEL_BUDGET: usize = 4096;

pub const FACTUAL: &str = "F";
pub const COUNTERFACTUAL: &str = "CF";
pub const OBSERVED: &str = "OBS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub labels: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, labels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Variable { name: name.into(), labels: labels.into_iter().map(Into::into).collect() }
    }
}

/// `V_target := f(parents, noise)`, tabulated row-major over the parent labels
/// followed by the noise labels (first input slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub target: usize,
    pub parents: Vec<usize>,
    pub noise: Vec<usize>,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmModel {
    pub exogenous: Vec<Variable>,
    /// Joint law of the exogenous variables, row-major.
    pub noise: Vec<Prob>,
    pub endogenous: Vec<Variable>,
    pub equations: Vec<Equation>,
}

fn radix_size(vars: &[Variable], idx: impl IntoIterator<Item = usize>) -> usize {
    idx.into_iter().map(|i| vars[i].labels.len()).product()
}

fn check_law(law: &[Prob], size: usize, what: &str) -> Result<()> {
    if law.len() != size {
        return Err(Error::Model(format!("{what} has {} weights for {size} points", law.len())));
    }
    if law.iter().any(Signed::is_negative) {
        return Err(Error::Model(format!("{what} has a negative weight")));
    }
    let total: Prob = law.iter().sum();
    if !total.is_one() {
        return Err(Error::Model(format!("{what} sums to {}", format_rational(&total))));
    }
    Ok(())
}

/// An SCM checked for well-formedness, with equations in a topological order.
struct Solver<'a> {
    model: &'a ScmModel,
    order: Vec<usize>,
    /// Equation index per endogenous variable.
    eq_of: Vec<usize>,
    exo_strides: Vec<usize>,
}

impl<'a> Solver<'a> {
    fn new(model: &'a ScmModel) -> Result<Self> {
        let n = model.endogenous.len();
        let n_exo = model.exogenous.len();
        if n == 0 {
            return Err(Error::Model("no endogenous variables".into()));
        }
        for v in model.exogenous.iter().chain(&model.endogenous) {
            Coordinate::new("", v.name.clone(), v.labels.clone())?;
        }
        check_law(&model.noise, radix_size(&model.exogenous, 0..n_exo), "noise law")?;
        let mut eq_of = vec![usize::MAX; n];
        for (e, eq) in model.equations.iter().enumerate() {
            let name = model
                .endogenous
                .get(eq.target)
                .map(|v| v.name.clone())
                .ok_or_else(|| Error::Model(format!("equation for unknown variable {}", eq.target)))?;
            if eq_of[eq.target] != usize::MAX {
                return Err(Error::Model(format!("two equations for {name}")));
            }
            eq_of[eq.target] = e;
            if eq.parents.iter().any(|&p| p >= n) || eq.noise.iter().any(|&u| u >= n_exo) {
                return Err(Error::Model(format!("equation for {name} has an unknown input")));
            }
            let rows = radix_size(&model.endogenous, eq.parents.iter().copied())
                * radix_size(&model.exogenous, eq.noise.iter().copied());
            if eq.table.len() != rows {
                return Err(Error::Model(format!(
                    "equation for {name} has {} rows, needs {rows}",
                    eq.table.len()
                )));
            }
            let arity = model.endogenous[eq.target].labels.len();
            if eq.table.iter().any(|&v| v >= arity) {
                return Err(Error::Model(format!("equation for {name} yields an unknown label")));
            }
        }
        if let Some(v) = eq_of.iter().position(|&e| e == usize::MAX) {
            return Err(Error::Model(format!("no equation for {}", model.endogenous[v].name)));
        }

        let mut g = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
        for eq in &model.equations {
            for &p in &eq.parents {
                g.add_edge(nodes[p], nodes[eq.target], ());
            }
        }
        let order = toposort(&g, None)
            .map_err(|c| Error::CyclicScm(format!("{} lies on a cycle", model.endogenous[g[c.node_id()]].name)))?
            .into_iter()
            .map(|ix| g[ix])
            .collect();

        let mut exo_strides = vec![1; n_exo];
        for i in (0..n_exo.saturating_sub(1)).rev() {
            exo_strides[i] = exo_strides[i + 1] * model.exogenous[i + 1].labels.len();
        }
        Ok(Solver { model, order, eq_of, exo_strides })
    }

    fn exo_value(&self, u: usize, i: usize) -> usize {
        u / self.exo_strides[i] % self.model.exogenous[i].labels.len()
    }

    /// Solution of the sub-model where `fixed` variables are held at their labels.
    fn solve(&self, u: usize, fixed: &[Option<usize>]) -> Vec<usize> {
        let m = self.model;
        let mut val = vec![0; m.endogenous.len()];
        for &v in &self.order {
            if let Some(x) = fixed[v] {
                val[v] = x;
                continue;
            }
            let eq = &m.equations[self.eq_of[v]];
            let mut row = 0;
            for &p in &eq.parents {
                row = row * m.endogenous[p].labels.len() + val[p];
            }
            for &e in &eq.noise {
                row = row * m.exogenous[e].labels.len() + self.exo_value(u, e);
            }
            val[v] = eq.table[row];
        }
        val
    }
}

/// Two mirrored worlds of the endogenous variables.
fn two_world_schema(model: &ScmModel) -> Result<Arc<SpaceSchema>> {
    let mut coords = Vec::new();
    for w in [FACTUAL, COUNTERFACTUAL] {
        for v in &model.endogenous {
            coords.push(Coordinate::new(w, v.name.clone(), v.labels.clone())?);
        }
    }
    Ok(Arc::new(SpaceSchema::new(coords)?))
}

fn encode(schema: &SpaceSchema, f: &[usize], cf: &[usize]) -> usize {
    let mut idx = 0;
    for (c, &v) in f.iter().chain(cf).enumerate() {
        idx = idx * schema.coord(c).arity() + v;
    }
    idx
}

/// Compiles an acyclic SCM into a two-world causal space with shared noise.
///
/// With `kernels = None` every kernel over the `2n` coordinates is emitted,
/// which is refused above [`KERNEL_BUDGET`]; otherwise only the listed sets
/// (and `∅`) are emitted.
pub fn compile_scm(model: &ScmModel, kernels: Option<&[CoordSet]>) -> Result<CausalSpace> {
    let solver = Solver::new(model)?;
    let schema = two_world_schema(model)?;
    let n = model.endogenous.len();
    let t = schema.all_coords();

    let eval = |fixed_f: &[Option<usize>], fixed_cf: &[Option<usize>]| -> Measure {
        let mut w = vec![Prob::zero(); schema.size()];
        for (u, pu) in model.noise.iter().enumerate() {
            if pu.is_zero() {
                continue;
            }
            let f = solver.solve(u, fixed_f);
            let cf = solver.solve(u, fixed_cf);
            w[encode(&schema, &f, &cf)] += pu;
        }
        Measure::from_parts(schema.clone(), w)
    };

    let free = vec![None; n];
    let prob = eval(&free, &free);
    let keys: Vec<CoordSet> = match kernels {
        Some(list) => {
            for s in list {
                schema.check_coordset(s)?;
            }
            list.to_vec()
        }
        None => {
            if t.len() >= usize::BITS as usize || (1usize << t.len()) > KERNEL_BUDGET {
                return Err(Error::Model(format!(
                    "the full mechanism has 2^{} kernels, more than {KERNEL_BUDGET}; list the kernels to emit",
                    t.len()
                )));
            }
            t.subsets().collect()
        }
    };
    let mut mech = Mechanism::new(&prob);
    for s in keys.into_iter().filter(|s| !s.is_empty()) {
        let proj = schema.projector(&s);
        let k = Kernel::from_fn(&schema, s.clone(), |sub| {
            let mut ff = vec![None; n];
            let mut fc = vec![None; n];
            for c in s.iter() {
                let v = proj.label_in(sub, c);
                if c < n {
                    ff[c] = Some(v);
                } else {
                    fc[c - n] = Some(v);
                }
            }
            Some(eval(&ff, &fc))
        })?;
        mech.insert(k)?;
    }
    CausalSpace::new(prob, mech)
}

/// Compiles a backtracking pair of SCMs with a coupling of their noises.
/// `coupling` is row-major over (noise of `model`, noise of `model_cf`).
/// The result has no kernels beyond `K_∅`.
pub fn compile_backtracking(model: &ScmModel, model_cf: &ScmModel, coupling: &[Prob]) -> Result<CausalSpace> {
    let s_f = Solver::new(model)?;
    let s_cf = Solver::new(model_cf)?;
    if model.endogenous != model_cf.endogenous {
        return Err(Error::SchemaMismatch("the two SCMs have different endogenous variables".into()));
    }
    let (nu, nu_cf) = (model.noise.len(), model_cf.noise.len());
    check_law(coupling, nu * nu_cf, "coupling")?;
    let schema = two_world_schema(model)?;
    let free = vec![None; model.endogenous.len()];
    let f_vals: Vec<Vec<usize>> = (0..nu).map(|u| s_f.solve(u, &free)).collect();
    let cf_vals: Vec<Vec<usize>> = (0..nu_cf).map(|u| s_cf.solve(u, &free)).collect();
    let mut w = vec![Prob::zero(); schema.size()];
    for (i, p) in coupling.iter().enumerate() {
        if !p.is_zero() {
            w[encode(&schema, &f_vals[i / nu_cf], &cf_vals[i % nu_cf])] += p;
        }
    }
    Ok(CausalSpace::observational(Measure::from_parts(schema, w)))
}

/// The coupling that shares the noise: `PB(u, u*) = P(u) 𝟙{u = u*}`.
pub fn diagonal_coupling(noise: &[Prob]) -> Vec<Prob> {
    let n = noise.len();
    let mut out = vec![Prob::zero(); n * n];
    for (u, p) in noise.iter().enumerate() {
        out[u * n + u] = p.clone();
    }
    out
}

/// The coupling with independent noises.
pub fn product_coupling(noise: &[Prob], noise_cf: &[Prob]) -> Vec<Prob> {
    noise.iter().flat_map(|p| noise_cf.iter().map(move |q| p * q)).collect()
}

/// `V_{target, X=x}` as a function of the unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialOutcome {
    pub target: usize,
    /// `(variable, label)` pairs, sorted by variable.
    pub intervention: Vec<(usize, usize)>,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoModel {
    pub units: Vec<String>,
    pub unit_prob: Vec<Prob>,
    pub endogenous: Vec<Variable>,
    /// `observed[i][unit]`: label of `V_i` for the unit.
    pub observed: Vec<Vec<usize>>,
    pub potentials: Vec<PotentialOutcome>,
}

/// World name for the `j`-th (1-based) distinct intervention.
pub fn po_world(j: usize) -> String {
    format!("W{j}")
}

/// Compiles a potential-outcome model into an (N+1)-way space.
///
/// Worlds `W1..WN` correspond to the distinct interventions in order of
/// first appearance; world `j` carries the variables that have a potential
/// outcome under intervention `j`. The observed world `OBS` comes last and
/// carries every variable.
pub fn compile_po(model: &PoModel) -> Result<CausalSpace> {
    let n_units = model.units.len();
    if n_units == 0 {
        return Err(Error::Model("no units".into()));
    }
    check_law(&model.unit_prob, n_units, "unit law")?;
    let nv = model.endogenous.len();
    let check_values = |values: &[usize], var: usize, what: &str| -> Result<()> {
        if values.len() != n_units {
            return Err(Error::Model(format!("{what} is not given for every unit")));
        }
        if values.iter().any(|&v| v >= model.endogenous[var].labels.len()) {
            return Err(Error::Model(format!("{what} yields an unknown label")));
        }
        Ok(())
    };
    if model.observed.len() != nv {
        return Err(Error::Model("every variable needs an observed function".into()));
    }
    for (i, vals) in model.observed.iter().enumerate() {
        check_values(vals, i, &format!("observed {}", model.endogenous[i].name))?;
    }

    let mut interventions: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut members: Vec<BTreeMap<usize, &PotentialOutcome>> = Vec::new();
    for po in &model.potentials {
        let name = model
            .endogenous
            .get(po.target)
            .map(|v| v.name.clone())
            .ok_or_else(|| Error::Model("potential outcome of an unknown variable".into()))?;
        if po.intervention.iter().any(|&(v, l)| v >= nv || l >= model.endogenous[v].labels.len()) {
            return Err(Error::Model(format!("potential outcome of {name} under an unknown intervention")));
        }
        check_values(&po.values, po.target, &format!("potential outcome of {name}"))?;
        let j = match interventions.iter().position(|x| *x == po.intervention) {
            Some(j) => j,
            None => {
                interventions.push(po.intervention.clone());
                members.push(BTreeMap::new());
                interventions.len() - 1
            }
        };
        if members[j].insert(po.target, po).is_some() {
            return Err(Error::Model(format!("potential outcome of {name} given twice for one intervention")));
        }
    }

    let mut coords = Vec::new();
    let mut value_of: Vec<&[usize]> = Vec::new();
    for (j, m) in members.iter().enumerate() {
        for (&i, po) in m {
            let v = &model.endogenous[i];
            coords.push(Coordinate::new(po_world(j + 1), v.name.clone(), v.labels.clone())?);
            value_of.push(&po.values);
        }
    }
    for (i, v) in model.endogenous.iter().enumerate() {
        coords.push(Coordinate::new(OBSERVED, v.name.clone(), v.labels.clone())?);
        value_of.push(&model.observed[i]);
    }
    let schema = Arc::new(SpaceSchema::new(coords)?);
    let mut w = vec![Prob::zero(); schema.size()];
    for (unit, p) in model.unit_prob.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let mut idx = 0;
        for (c, vals) in value_of.iter().enumerate() {
            idx = idx * schema.coord(c).arity() + vals[unit];
        }
        w[idx] += p;
    }
    Ok(CausalSpace::observational(Measure::from_parts(schema, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn bin(name: &str) -> Variable {
        Variable::new(name, ["0", "1"])
    }

    fn coin_scm() -> ScmModel {
        ScmModel {
            exogenous: vec![bin("U")],
            noise: vec![ratio(1, 2), ratio(1, 2)],
            endogenous: vec![Variable::new("coin", ["H", "T"])],
            equations: vec![Equation { target: 0, parents: vec![], noise: vec![0], table: vec![0, 1] }],
        }
    }

    /// X := U_X, Y := X xor U_Y with independent uniform noise.
    pub(crate) fn chain_scm() -> ScmModel {
        ScmModel {
            exogenous: vec![bin("UX"), bin("UY")],
            noise: vec![ratio(1, 4); 4],
            endogenous: vec![bin("X"), bin("Y")],
            equations: vec![
                Equation { target: 0, parents: vec![], noise: vec![0], table: vec![0, 1] },
                Equation { target: 1, parents: vec![0], noise: vec![1], table: vec![0, 1, 1, 0] },
            ],
        }
    }

    #[test]
    fn coin_scm_is_synchronised() {
        let s = compile_scm(&coin_scm(), None).unwrap();
        assert_eq!(s.prob().weights(), &[ratio(1, 2), int(0), int(0), ratio(1, 2)]);
        assert!(s.prob().synchronized(&CoordSet::new([0]), &CoordSet::new([1])).unwrap());
        assert_eq!(s.mechanism().len(), 4);
        assert!(s.check_all().is_clean());
    }

    #[test]
    fn chain_kernel_on_cf_x() {
        let s = compile_scm(&chain_scm(), None).unwrap();
        assert_eq!(s.mechanism().len(), 16);
        assert!(s.check_all().is_clean());
        let k = s.mechanism().get(&CoordSet::new([2])).unwrap();
        let m = k.entry(1).unwrap();
        let y1 = s.schema().cylinder_named(&[("CF.Y", "1")]).unwrap();
        assert_eq!(m.prob(&y1).unwrap(), ratio(1, 2));
        let f = CoordSet::new([0, 1]);
        assert_eq!(m.marginal(&f), s.prob().marginal(&f));
    }

    #[test]
    fn listed_kernels_only() {
        let s = compile_scm(&chain_scm(), Some(&[CoordSet::new([2])])).unwrap();
        assert_eq!(s.mechanism().keys().cloned().collect::<Vec<_>>(), vec![CoordSet::empty(), CoordSet::new([2])]);
    }

    #[test]
    fn cyclic_scm_rejected() {
        let mut m = chain_scm();
        m.equations[0] = Equation { target: 0, parents: vec![1], noise: vec![], table: vec![0, 1] };
        assert!(matches!(compile_scm(&m, None), Err(Error::CyclicScm(_))));
    }

    #[test]
    fn malformed_scm_rejected() {
        let mut m = chain_scm();
        m.equations[1].table.pop();
        assert!(matches!(compile_scm(&m, None), Err(Error::Model(_))));
        let mut m = chain_scm();
        m.noise[0] = ratio(1, 2);
        assert!(compile_scm(&m, None).is_err());
        let mut m = chain_scm();
        m.equations.pop();
        assert!(compile_scm(&m, None).is_err());
    }

    #[test]
    fn budget_enforced() {
        let mut m = chain_scm();
        for i in 2..7 {
            m.endogenous.push(bin(&format!("V{i}")));
            m.equations.push(Equation { target: i, parents: vec![], noise: vec![0], table: vec![0, 1] });
        }
        assert!(matches!(compile_scm(&m, None), Err(Error::Model(_))));
        assert!(compile_scm(&m, Some(&[])).is_ok());
    }

    #[test]
    fn backtracking_couplings() {
        let m = chain_scm();
        let diag = compile_backtracking(&m, &m, &diagonal_coupling(&m.noise)).unwrap();
        assert_eq!(diag.prob(), compile_scm(&m, Some(&[])).unwrap().prob());
        let prod = compile_backtracking(&m, &m, &product_coupling(&m.noise, &m.noise)).unwrap();
        assert!(prod.prob().independent_sigmas(&CoordSet::new([0, 1]), &CoordSet::new([2, 3])).unwrap());
        assert_eq!(prod.mechanism().len(), 1);
    }

    fn po_toy() -> PoModel {
        // Units: always-pass, never-pass, complier, defier.
        PoModel {
            units: ["always", "never", "complier", "defier"].map(String::from).to_vec(),
            unit_prob: vec![ratio(1, 4); 4],
            endogenous: vec![bin("X"), Variable::new("Y", ["fail", "pass"])],
            observed: vec![vec![1, 0, 1, 0], vec![1, 0, 1, 1]],
            potentials: vec![
                PotentialOutcome { target: 1, intervention: vec![(0, 1)], values: vec![1, 0, 1, 0] },
                PotentialOutcome { target: 1, intervention: vec![(0, 0)], values: vec![1, 0, 0, 1] },
            ],
        }
    }

    #[test]
    fn po_three_worlds() {
        let s = compile_po(&po_toy()).unwrap();
        assert_eq!(s.worlds(), &["W1", "W2", "OBS"].map(String::from));
        let q = s.schema().cylinder_named(&[("W1.Y", "pass"), ("W2.Y", "fail")]).unwrap();
        assert_eq!(s.prob().prob(&q).unwrap(), ratio(1, 4));
        let obs = s.schema().world_coords(OBSERVED);
        let y = s.prob().marginal(&obs);
        // (X, Y): (1,pass) twice, (0,fail), (0,pass).
        assert_eq!(y.weights(), &[ratio(1, 4), ratio(1, 4), int(0), ratio(1, 2)]);
        assert!(s.check_all().is_clean());
    }

    #[test]
    fn po_degenerate_shapes() {
        let mut m = po_toy();
        m.potentials.truncate(1);
        let s = compile_po(&m).unwrap();
        assert_eq!(s.worlds().len(), 2);
        assert_eq!(s.schema().world_coords("W1").len(), 1);
        m.potentials.clear();
        let s = compile_po(&m).unwrap();
        assert_eq!(s.worlds(), &[OBSERVED.to_string()]);
    }

    #[test]
    fn po_rejects_incomplete_functions() {
        let mut m = po_toy();
        m.potentials[0].values.pop();
        assert!(matches!(compile_po(&m), Err(Error::Model(_))));
        let mut m = po_toy();
        m.potentials.push(m.potentials[0].clone());
        assert!(compile_po(&m).is_err());
    }
}
