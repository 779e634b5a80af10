//! Builders that turn a graph and a scale into each linear program we solve,
//! keeping a semantic index of every column and row.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{PartitionFamily, PartitionFunction};
use crate::graph::{Graph, GraphError, Scale};
use crate::lp::{self, Bound, LinearProgram, LpError, LpSolution, Relation, Sense};
use crate::rational::Rational;

/// Default per-set size ceiling for subset enumeration.
pub const DEFAULT_SUBSET_CAP: usize = 20;
/// Largest family the exponential isoperimetric dual is ever built for.
pub const TINY_SUBSET_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("scale has {got} sets but the graph has {expected} vertices")]
    ScaleMismatch { expected: usize, got: usize },
    #[error("graph has no edges")]
    Edgeless,
    #[error("vertex set is empty")]
    EmptySet,
    #[error("dual-scale set {set} has {size} vertices, above the enumeration cap {cap}; use the flow formulation instead")]
    CapExceeded { set: usize, size: usize, cap: usize },
    #[error("{0} subsets exceed the tiny-instance limit for the isoperimetric dual")]
    TooManySubsets(usize),
    #[error("isoperimetric dual requested without the tiny-instance flag")]
    NotTiny,
    #[error("subset family does not belong to this scale: {0}")]
    FamilyMismatch(String),
    #[error("dual weights violate a constraint: {0}")]
    InvalidWeights(String),
    #[error("LP solve ended with status {0:?}")]
    NotOptimal(lp::LpStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Measures,
    PseudoFlows,
    FixedCapacityFlows,
    Isoperimetric,
    Partition,
    UniformFlows,
    MeanPropertyA,
    SingleColumn,
    IsoperimetricDual,
    SymmetricReduced,
}

/// Semantic name of an LP column. Edges are referenced by index into
/// [`Graph::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// `x_{i,j}`: mass of measure `i` at `j`.
    X(usize, usize),
    /// `e_{uv,k}`: variation of coordinate `k` across edge `uv`.
    EdgeVar(usize, usize),
    /// The global bound `e` (also `a` in the isoperimetric dual).
    E,
    Eta(usize),
    /// Single demand shared by every vertex.
    EtaGlobal,
    Kappa(usize),
    /// `φ_{k, e}`: flow of focus `k` along edge `e`.
    Phi(usize, usize),
    /// `f_{i,j}`: value of partition function `i` at `j`.
    F(usize, usize),
    N(usize, usize),
    /// `c_{e,k}` of the mean problem.
    C(usize, usize),
    /// Weight of subset `t` of the family.
    Z(usize),
    /// Orbit-level variables of the symmetric reduction.
    EtaOrbit(usize),
    KappaOrbit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKey {
    RowSum(usize),
    PointSum(usize),
    DiffUp(usize, usize),
    DiffDown(usize, usize),
    EdgeTotal(usize),
    Capacity,
    PhiUpper(usize, usize),
    PhiLower(usize, usize),
    /// Supply of flow `k` at vertex `i`.
    Supply(usize, usize),
    Cut(usize),
    Mass,
    Cover(usize),
}

#[derive(Debug, Clone)]
pub struct IndexedLp {
    pub lp: LinearProgram,
    pub kind: ProblemKind,
    vars: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
    rows: Vec<RowKey>,
    row_index: HashMap<RowKey, usize>,
}

impl IndexedLp {
    pub(crate) fn new(kind: ProblemKind, sense: Sense) -> Self {
        IndexedLp {
            lp: LinearProgram::new(sense),
            kind,
            vars: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            row_index: HashMap::new(),
        }
    }

    pub(crate) fn add_var(&mut self, key: VarKey, name: String, bound: Bound) -> usize {
        let j = self.lp.add_var(name, bound);
        self.vars.push(key);
        let prev = self.index.insert(key, j);
        debug_assert!(prev.is_none(), "duplicate column {key:?}");
        j
    }

    pub(crate) fn add_row(
        &mut self,
        key: RowKey,
        name: String,
        coeffs: Vec<(usize, Rational)>,
        rel: Relation,
        rhs: Rational,
    ) {
        let r = self.lp.add_constraint(name, coeffs, rel, rhs);
        self.rows.push(key);
        self.row_index.insert(key, r);
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn row(&self, key: RowKey) -> Option<usize> {
        self.row_index.get(&key).copied()
    }

    pub fn var_keys(&self) -> &[VarKey] {
        &self.vars
    }

    pub fn row_keys(&self) -> &[RowKey] {
        &self.rows
    }

    /// Value of `key` in `sol`, or zero for columns omitted by construction.
    pub fn value(&self, sol: &LpSolution, key: VarKey) -> Rational {
        self.var(key).map_or_else(Rational::zero, |j| sol.assignment[j].clone())
    }

    pub fn dual(&self, sol: &LpSolution, key: RowKey) -> Rational {
        self.row(key).map_or_else(Rational::zero, |r| sol.duals[r].clone())
    }

    pub fn to_lp_text(&self) -> String {
        self.lp.to_lp_text()
    }

    /// Solve after checking the column ceiling.
    pub fn solve(&self) -> Result<LpSolution, ProblemError> {
        let limit = lp::max_lp_cols();
        if self.lp.num_vars() > limit {
            return Err(LpError::TooLarge {
                cols: self.lp.num_vars(),
                rows: self.lp.num_rows(),
                limit,
            }
            .into());
        }
        Ok(lp::solve(&self.lp))
    }

    /// Solve and insist on an optimal status.
    pub fn solve_optimal(&self) -> Result<LpSolution, ProblemError> {
        let sol = self.solve()?;
        if sol.is_optimal() {
            Ok(sol)
        } else {
            Err(ProblemError::NotOptimal(sol.status))
        }
    }
}

pub(crate) fn check_scale(g: &Graph, sc: &Scale) -> Result<(), ProblemError> {
    if sc.len() != g.vertex_count() {
        return Err(ProblemError::ScaleMismatch { expected: g.vertex_count(), got: sc.len() });
    }
    // Re-run the constructor checks so hand-built scales are validated too.
    Scale::new(g.vertex_count(), sc.sets.clone())?;
    Ok(())
}

fn one() -> Rational {
    Rational::one()
}

fn minus_one() -> Rational {
    -Rational::one()
}

pub(crate) fn edge_label(g: &Graph, e: usize) -> String {
    let (u, v) = g.edges()[e];
    format!("{u}_{v}")
}

/// Sorted union of two sorted lists.
fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out
}

/// Edges with at least one endpoint in `set`, as indices.
pub fn edges_touching(g: &Graph, member: &[bool]) -> Vec<usize> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| member[u] || member[v])
        .map(|(e, _)| e)
        .collect()
}

/// Minimal variation of scale-supported probability measures.
///
/// Columns `x_{i,j}` exist only for `j ∈ S_i` and `e_{uv,k}` only for
/// `k ∈ S_u ∪ S_v`; every other coordinate is identically zero.
pub fn build_measures(g: &Graph, sc: &Scale) -> Result<IndexedLp, ProblemError> {
    check_scale(g, sc)?;
    let mut ilp = IndexedLp::new(ProblemKind::Measures, Sense::Min);
    for (i, s) in sc.sets.iter().enumerate() {
        for &j in s {
            ilp.add_var(VarKey::X(i, j), format!("x_{i}_{j}"), Bound::nonneg());
        }
    }
    let e = ilp.add_var(VarKey::E, "e".into(), Bound::nonneg());
    ilp.lp.set_objective(vec![(e, one())]);
    for (i, s) in sc.sets.iter().enumerate() {
        let coeffs = s.iter().map(|&j| (ilp.var(VarKey::X(i, j)).unwrap(), one())).collect();
        ilp.add_row(RowKey::RowSum(i), format!("sum_{i}"), coeffs, Relation::Eq, one());
    }
    for (ei, &(u, v)) in g.edges().iter().enumerate() {
        let lbl = edge_label(g, ei);
        let ks = union_sorted(&sc.sets[u], &sc.sets[v]);
        let mut total = Vec::with_capacity(ks.len() + 1);
        for k in ks {
            let ev = ilp.add_var(VarKey::EdgeVar(ei, k), format!("e_{lbl}_{k}"), Bound::nonneg());
            let xu = ilp.var(VarKey::X(u, k));
            let xv = ilp.var(VarKey::X(v, k));
            let mut up = vec![(ev, minus_one())];
            let mut down = vec![(ev, minus_one())];
            if let Some(xv) = xv {
                up.push((xv, one()));
                down.push((xv, minus_one()));
            }
            if let Some(xu) = xu {
                up.push((xu, minus_one()));
                down.push((xu, one()));
            }
            ilp.add_row(RowKey::DiffUp(ei, k), format!("up_{lbl}_{k}"), up, Relation::Le, Rational::zero());
            ilp.add_row(RowKey::DiffDown(ei, k), format!("down_{lbl}_{k}"), down, Relation::Le, Rational::zero());
            total.push((ev, one()));
        }
        total.push((e, minus_one()));
        ilp.add_row(RowKey::EdgeTotal(ei), format!("var_{lbl}"), total, Relation::Le, Rational::zero());
    }
    Ok(ilp)
}

fn add_flow_block(
    ilp: &mut IndexedLp,
    g: &Graph,
    dsc: &Scale,
    capacity: &dyn Fn(usize) -> FlowCap,
    eta_of: &dyn Fn(usize) -> usize,
) {
    for (k, set) in dsc.sets.iter().enumerate() {
        let member = g.indicator(set);
        let touching = edges_touching(g, &member);
        for &ei in &touching {
            let lbl = edge_label(g, ei);
            let bound = match capacity(ei) {
                FlowCap::Column(_) => Bound::free(),
                FlowCap::Fixed(c) => Bound { lower: Some(-&c), upper: Some(c) },
            };
            let phi = ilp.add_var(VarKey::Phi(k, ei), format!("phi_{k}_e{ei}"), bound);
            if let FlowCap::Column(kap) = capacity(ei) {
                ilp.add_row(
                    RowKey::PhiUpper(k, ei),
                    format!("cap_up_{k}_{lbl}"),
                    vec![(phi, one()), (kap, minus_one())],
                    Relation::Le,
                    Rational::zero(),
                );
                ilp.add_row(
                    RowKey::PhiLower(k, ei),
                    format!("cap_down_{k}_{lbl}"),
                    vec![(phi, minus_one()), (kap, minus_one())],
                    Relation::Le,
                    Rational::zero(),
                );
            }
        }
        for &i in set {
            let mut coeffs = Vec::new();
            for &w in g.neighbors(i) {
                let ei = g.edge_index(i, w).unwrap();
                let phi = ilp.var(VarKey::Phi(k, ei)).unwrap();
                // canonical orientation u -> v: positive flow enters v
                coeffs.push((phi, if i > w { one() } else { minus_one() }));
            }
            coeffs.push((eta_of(i), minus_one()));
            ilp.add_row(RowKey::Supply(k, i), format!("supply_{k}_{i}"), coeffs, Relation::Ge, Rational::zero());
        }
    }
}

enum FlowCap {
    Column(usize),
    Fixed(Rational),
}

/// Maximal net supply of pseudo-flows. Pass the dual scale.
///
/// `φ_{k,e}` exists only for edges touching `S̄_k`.
pub fn build_pseudo_flows(g: &Graph, dsc: &Scale) -> Result<IndexedLp, ProblemError> {
    check_scale(g, dsc)?;
    let mut ilp = IndexedLp::new(ProblemKind::PseudoFlows, Sense::Max);
    let eta: Vec<usize> = (0..g.vertex_count())
        .map(|i| ilp.add_var(VarKey::Eta(i), format!("eta_{i}"), Bound::free()))
        .collect();
    let kappa: Vec<usize> = (0..g.edge_count())
        .map(|e| ilp.add_var(VarKey::Kappa(e), format!("kappa_{}", edge_label(g, e)), Bound::nonneg()))
        .collect();
    ilp.lp.set_objective(eta.iter().map(|&j| (j, one())).collect());
    ilp.add_row(
        RowKey::Capacity,
        "capacity".into(),
        kappa.iter().map(|&j| (j, one())).collect(),
        Relation::Le,
        one(),
    );
    add_flow_block(&mut ilp, g, dsc, &|e| FlowCap::Column(kappa[e]), &|i| eta[i]);
    Ok(ilp)
}

/// Pseudo-flows with each capacity pinned to `kappa[e]` and per-vertex demands.
pub fn build_fixed_capacity_flows(
    g: &Graph,
    dsc: &Scale,
    kappa: &[Rational],
) -> Result<IndexedLp, ProblemError> {
    check_scale(g, dsc)?;
    if kappa.len() != g.edge_count() {
        return Err(ProblemError::FamilyMismatch(format!(
            "{} capacities for {} edges",
            kappa.len(),
            g.edge_count()
        )));
    }
    let mut ilp = IndexedLp::new(ProblemKind::FixedCapacityFlows, Sense::Max);
    let eta: Vec<usize> = (0..g.vertex_count())
        .map(|i| ilp.add_var(VarKey::Eta(i), format!("eta_{i}"), Bound::free()))
        .collect();
    ilp.lp.set_objective(eta.iter().map(|&j| (j, one())).collect());
    add_flow_block(&mut ilp, g, dsc, &|e| FlowCap::Fixed(kappa[e].clone()), &|i| eta[i]);
    Ok(ilp)
}

/// Uniform pseudo-flows: every capacity is `1/|E|` and one demand `η` is
/// shared by all vertices; the objective is `|V| η`. Pass the dual scale.
pub fn build_uniform_flows(g: &Graph, dsc: &Scale) -> Result<IndexedLp, ProblemError> {
    check_scale(g, dsc)?;
    if g.edge_count() == 0 {
        return Err(ProblemError::Edgeless);
    }
    let cap = Rational::new(1, g.edge_count() as i64);
    let mut ilp = IndexedLp::new(ProblemKind::UniformFlows, Sense::Max);
    let eta = ilp.add_var(VarKey::EtaGlobal, "eta".into(), Bound::free());
    ilp.lp.set_objective(vec![(eta, Rational::from(g.vertex_count()))]);
    add_flow_block(&mut ilp, g, dsc, &|_| FlowCap::Fixed(cap.clone()), &|_| eta);
    Ok(ilp)
}

/// Maximize `η` with unit capacities and supply at least `η` on `set`; the
/// optimum is the smallest `|∂T|/|T|` over nonempty `T ⊆ set`.
pub fn build_single_column(g: &Graph, set: &[usize]) -> Result<IndexedLp, ProblemError> {
    if set.is_empty() {
        return Err(ProblemError::EmptySet);
    }
    if let Some(&v) = set.iter().find(|&&v| v >= g.vertex_count()) {
        return Err(GraphError::VertexOutOfRange(v, g.vertex_count()).into());
    }
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut ilp = IndexedLp::new(ProblemKind::SingleColumn, Sense::Max);
    let eta = ilp.add_var(VarKey::EtaGlobal, "eta".into(), Bound::free());
    ilp.lp.set_objective(vec![(eta, one())]);
    let member = g.indicator(&set);
    for ei in edges_touching(g, &member) {
        ilp.add_var(VarKey::Phi(0, ei), format!("phi_0_e{ei}"), Bound { lower: Some(minus_one()), upper: Some(one()) });
    }
    for &i in &set {
        let mut coeffs: Vec<(usize, Rational)> = g
            .neighbors(i)
            .iter()
            .map(|&w| {
                let phi = ilp.var(VarKey::Phi(0, g.edge_index(i, w).unwrap())).unwrap();
                (phi, if i > w { one() } else { minus_one() })
            })
            .collect();
        coeffs.push((eta, minus_one()));
        ilp.add_row(RowKey::Supply(0, i), format!("supply_{i}"), coeffs, Relation::Ge, Rational::zero());
    }
    Ok(ilp)
}

/// Subsets `T` of dual-scale sets, deduplicated, each tagged with the first
/// set containing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetFamily {
    pub subsets: Vec<Vec<usize>>,
    /// `origin[t]` is the index `k` of a dual-scale set with `subsets[t] ⊆ S̄_k`.
    pub origin: Vec<usize>,
    pub connected: Vec<bool>,
}

impl SubsetFamily {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Build a family from explicit subsets, checking each lies in `S̄_origin`.
    pub fn from_subsets(
        g: &Graph,
        dsc: &Scale,
        items: Vec<(Vec<usize>, usize)>,
    ) -> Result<SubsetFamily, ProblemError> {
        let mut seen = HashSet::new();
        let mut fam = SubsetFamily { subsets: Vec::new(), origin: Vec::new(), connected: Vec::new() };
        for (mut t, k) in items {
            t.sort_unstable();
            t.dedup();
            if t.is_empty() || k >= dsc.len() || !t.iter().all(|&v| dsc.contains(k, v)) {
                return Err(ProblemError::FamilyMismatch(format!("{t:?} is not inside set {k}")));
            }
            if seen.insert(t.clone()) {
                fam.connected.push(g.is_connected_subset(&t));
                fam.subsets.push(t);
                fam.origin.push(k);
            }
        }
        Ok(fam)
    }
}

/// Every nonempty subset (or, with `connected_only`, every subset inducing a
/// connected subgraph) of every dual-scale set.
pub fn enumerate_subsets(
    g: &Graph,
    dsc: &Scale,
    connected_only: bool,
    cap: usize,
) -> Result<SubsetFamily, ProblemError> {
    check_scale(g, dsc)?;
    for (k, s) in dsc.sets.iter().enumerate() {
        if s.len() > cap || s.len() > 30 {
            return Err(ProblemError::CapExceeded { set: k, size: s.len(), cap: cap.min(30) });
        }
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut fam = SubsetFamily { subsets: Vec::new(), origin: Vec::new(), connected: Vec::new() };
    for (k, set) in dsc.sets.iter().enumerate() {
        let m = set.len();
        // local adjacency as bitmasks over positions in `set`
        let adj: Vec<u32> = set
            .iter()
            .map(|&v| {
                set.iter()
                    .enumerate()
                    .filter(|(_, &w)| g.has_edge(v, w))
                    .fold(0u32, |acc, (p, _)| acc | (1 << p))
            })
            .collect();
        let mut masks: Vec<u32> = if connected_only {
            connected_masks(&adj)
        } else {
            (1..(1u64 << m) as u64).map(|x| x as u32).collect()
        };
        masks.sort_by_key(|&x| (x.count_ones(), x));
        for mask in masks {
            let t: Vec<usize> = (0..m).filter(|p| mask >> p & 1 == 1).map(|p| set[p]).collect();
            if seen.contains(&t) {
                continue;
            }
            fam.connected.push(connected_only || g.is_connected_subset(&t));
            seen.insert(t.clone());
            fam.subsets.push(t);
            fam.origin.push(k);
        }
    }
    Ok(fam)
}

/// Connected vertex sets of a small graph given by bitmask adjacency.
fn connected_masks(adj: &[u32]) -> Vec<u32> {
    let mut seen: HashSet<u32> = HashSet::new();
    let mut stack: Vec<u32> = (0..adj.len()).map(|p| 1u32 << p).collect();
    for &s in &stack {
        seen.insert(s);
    }
    while let Some(mask) = stack.pop() {
        let mut frontier = 0u32;
        for p in 0..adj.len() {
            if mask >> p & 1 == 1 {
                frontier |= adj[p];
            }
        }
        frontier &= !mask;
        while frontier != 0 {
            let p = frontier.trailing_zeros();
            frontier &= frontier - 1;
            let next = mask | (1 << p);
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen.into_iter().collect()
}

/// Weighted isoperimetric inequalities: `Σ_{i∈T} η_i ≤ Σ_{∂T} κ` for every `T`
/// in `family`, plus total capacity at most one. Pass the dual scale.
pub fn build_isoperimetric(
    g: &Graph,
    dsc: &Scale,
    family: &SubsetFamily,
) -> Result<IndexedLp, ProblemError> {
    check_scale(g, dsc)?;
    check_family(dsc, family)?;
    let mut ilp = IndexedLp::new(ProblemKind::Isoperimetric, Sense::Max);
    let eta: Vec<usize> = (0..g.vertex_count())
        .map(|i| ilp.add_var(VarKey::Eta(i), format!("eta_{i}"), Bound::free()))
        .collect();
    let kappa: Vec<usize> = (0..g.edge_count())
        .map(|e| ilp.add_var(VarKey::Kappa(e), format!("kappa_{}", edge_label(g, e)), Bound::nonneg()))
        .collect();
    ilp.lp.set_objective(eta.iter().map(|&j| (j, one())).collect());
    ilp.add_row(
        RowKey::Capacity,
        "capacity".into(),
        kappa.iter().map(|&j| (j, one())).collect(),
        Relation::Le,
        one(),
    );
    for (t, set) in family.subsets.iter().enumerate() {
        let mut coeffs: Vec<(usize, Rational)> = set.iter().map(|&i| (eta[i], one())).collect();
        coeffs.extend(g.boundary_of(set).into_iter().map(|e| (kappa[e], minus_one())));
        ilp.add_row(RowKey::Cut(t), format!("cut_{t}"), coeffs, Relation::Le, Rational::zero());
    }
    Ok(ilp)
}

fn check_family(dsc: &Scale, family: &SubsetFamily) -> Result<(), ProblemError> {
    for (t, set) in family.subsets.iter().enumerate() {
        let k = family.origin[t];
        if set.is_empty() || k >= dsc.len() || !set.iter().all(|&v| dsc.contains(k, v)) {
            return Err(ProblemError::FamilyMismatch(format!("subset {t} not inside set {k}")));
        }
    }
    Ok(())
}

/// The exponential dual of the isoperimetric LP (weights `z_T`, bound `a`).
/// Only built when `tiny` is set and the family has at most
/// [`TINY_SUBSET_LIMIT`] members.
pub fn build_isoperimetric_dual(
    g: &Graph,
    dsc: &Scale,
    family: &SubsetFamily,
    tiny: bool,
) -> Result<IndexedLp, ProblemError> {
    if !tiny {
        return Err(ProblemError::NotTiny);
    }
    if family.len() > TINY_SUBSET_LIMIT {
        return Err(ProblemError::TooManySubsets(family.len()));
    }
    check_scale(g, dsc)?;
    check_family(dsc, family)?;
    let mut ilp = IndexedLp::new(ProblemKind::IsoperimetricDual, Sense::Min);
    let z: Vec<usize> = (0..family.len())
        .map(|t| ilp.add_var(VarKey::Z(t), format!("z_{t}"), Bound::nonneg()))
        .collect();
    let a = ilp.add_var(VarKey::E, "a".into(), Bound::free());
    ilp.lp.set_objective(vec![(a, one())]);
    let mut by_edge: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); g.edge_count()];
    let mut by_vertex: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); g.vertex_count()];
    for (t, set) in family.subsets.iter().enumerate() {
        for e in g.boundary_of(set) {
            by_edge[e].push((z[t], one()));
        }
        for &i in set {
            by_vertex[i].push((z[t], one()));
        }
    }
    for (e, mut coeffs) in by_edge.into_iter().enumerate() {
        coeffs.push((a, minus_one()));
        ilp.add_row(RowKey::EdgeTotal(e), format!("edge_{}", edge_label(g, e)), coeffs, Relation::Le, Rational::zero());
    }
    for (i, coeffs) in by_vertex.into_iter().enumerate() {
        ilp.add_row(RowKey::Cover(i), format!("cover_{i}"), coeffs, Relation::Eq, one());
    }
    Ok(ilp)
}

/// Partition of unity `{f_i}` with `supp f_i ⊆ S_i`, minimizing the summed
/// per-edge variation.
pub fn build_partition(g: &Graph, sc: &Scale) -> Result<IndexedLp, ProblemError> {
    check_scale(g, sc)?;
    let dsc = crate::graph::dual_scale(sc)?;
    let mut ilp = IndexedLp::new(ProblemKind::Partition, Sense::Min);
    for (i, s) in sc.sets.iter().enumerate() {
        for &j in s {
            ilp.add_var(VarKey::F(i, j), format!("f_{i}_{j}"), Bound::nonneg());
        }
    }
    let e = ilp.add_var(VarKey::E, "e".into(), Bound::nonneg());
    ilp.lp.set_objective(vec![(e, one())]);
    for (j, fs) in dsc.sets.iter().enumerate() {
        let coeffs = fs.iter().map(|&i| (ilp.var(VarKey::F(i, j)).unwrap(), one())).collect();
        ilp.add_row(RowKey::PointSum(j), format!("point_{j}"), coeffs, Relation::Eq, one());
    }
    for (ei, &(u, v)) in g.edges().iter().enumerate() {
        let lbl = edge_label(g, ei);
        let funcs = union_sorted(&dsc.sets[u], &dsc.sets[v]);
        let mut total = Vec::with_capacity(funcs.len() + 1);
        for i in funcs {
            let ev = ilp.add_var(VarKey::EdgeVar(ei, i), format!("e_{lbl}_{i}"), Bound::nonneg());
            let mut up = vec![(ev, minus_one())];
            let mut down = vec![(ev, minus_one())];
            if let Some(fv) = ilp.var(VarKey::F(i, v)) {
                up.push((fv, one()));
                down.push((fv, minus_one()));
            }
            if let Some(fu) = ilp.var(VarKey::F(i, u)) {
                up.push((fu, minus_one()));
                down.push((fu, one()));
            }
            ilp.add_row(RowKey::DiffUp(ei, i), format!("up_{lbl}_{i}"), up, Relation::Le, Rational::zero());
            ilp.add_row(RowKey::DiffDown(ei, i), format!("down_{lbl}_{i}"), down, Relation::Le, Rational::zero());
            total.push((ev, one()));
        }
        total.push((e, minus_one()));
        ilp.add_row(RowKey::EdgeTotal(ei), format!("var_{lbl}"), total, Relation::Le, Rational::zero());
    }
    Ok(ilp)
}

/// Mean property A: functions `n_i` supported on `S_i` with total mass `|V|`,
/// minimizing the average summed variation `(1/|E|) Σ c_{uv,k}` where
/// `|n_{v,k} − n_{u,k}| ≤ c_{uv,k}`.
///
/// Its optimum equals the uniform-flows optimum at the dual scale.
pub fn build_mean_property_a(g: &Graph, sc: &Scale) -> Result<IndexedLp, ProblemError> {
    check_scale(g, sc)?;
    let mut ilp = IndexedLp::new(ProblemKind::MeanPropertyA, Sense::Min);
    let mut mass = Vec::new();
    for (i, s) in sc.sets.iter().enumerate() {
        for &j in s {
            let c = ilp.add_var(VarKey::N(i, j), format!("n_{i}_{j}"), Bound::nonneg());
            mass.push((c, one()));
        }
    }
    ilp.add_row(RowKey::Mass, "mass".into(), mass, Relation::Eq, Rational::from(g.vertex_count()));
    let weight = if g.edge_count() == 0 { one() } else { Rational::new(1, g.edge_count() as i64) };
    let mut objective = Vec::new();
    for (ei, &(u, v)) in g.edges().iter().enumerate() {
        let lbl = edge_label(g, ei);
        for k in union_sorted(&sc.sets[u], &sc.sets[v]) {
            let c = ilp.add_var(VarKey::C(ei, k), format!("c_{lbl}_{k}"), Bound::nonneg());
            objective.push((c, weight.clone()));
            let mut up = vec![(c, minus_one())];
            let mut down = vec![(c, minus_one())];
            if let Some(nv) = ilp.var(VarKey::N(v, k)) {
                up.push((nv, one()));
                down.push((nv, minus_one()));
            }
            if let Some(nu) = ilp.var(VarKey::N(u, k)) {
                up.push((nu, minus_one()));
                down.push((nu, one()));
            }
            ilp.add_row(RowKey::DiffUp(ei, k), format!("up_{lbl}_{k}"), up, Relation::Le, Rational::zero());
            ilp.add_row(RowKey::DiffDown(ei, k), format!("down_{lbl}_{k}"), down, Relation::Le, Rational::zero());
        }
    }
    ilp.lp.set_objective(objective);
    Ok(ilp)
}

/// Flat partition `ψ_T = z_T · χ_T` from isoperimetric-dual weights.
/// Fails unless `z ≥ 0`, `Σ_{T∋i} z_T = 1` for every `i`, and every edge's
/// boundary weight is at most `a`.
pub fn flat_partition_from_z(
    g: &Graph,
    dsc: &Scale,
    family: &SubsetFamily,
    z: &BTreeMap<usize, Rational>,
    a: &Rational,
) -> Result<PartitionFamily, ProblemError> {
    check_scale(g, dsc)?;
    check_family(dsc, family)?;
    let mut cover = vec![Rational::zero(); g.vertex_count()];
    let mut edge = vec![Rational::zero(); g.edge_count()];
    let mut functions = Vec::new();
    for (&t, w) in z {
        if t >= family.len() {
            return Err(ProblemError::InvalidWeights(format!("unknown subset {t}")));
        }
        if w.is_negative() {
            return Err(ProblemError::InvalidWeights(format!("z_{t} = {w} is negative")));
        }
        if w.is_zero() {
            continue;
        }
        let set = &family.subsets[t];
        for &i in set {
            cover[i] += w;
        }
        for e in g.boundary_of(set) {
            edge[e] += w;
        }
        functions.push(PartitionFunction {
            tag: family.origin[t],
            values: set.iter().map(|&i| (i, w.clone())).collect(),
        });
    }
    if let Some(i) = cover.iter().position(|c| *c != Rational::one()) {
        return Err(ProblemError::InvalidWeights(format!("vertex {i} covered with weight {}", cover[i])));
    }
    if let Some(e) = edge.iter().position(|w| w > a) {
        return Err(ProblemError::InvalidWeights(format!("edge {e} carries {} > {a}", edge[e])));
    }
    Ok(PartitionFamily { functions, flat: true, variation: a.clone() })
}
