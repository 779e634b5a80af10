//! Certificates and the flow algorithms behind them.
//!
//! A pseudo-flow assigns each canonical edge `(u, v)`, `u < v`, a signed
//! value; positive means `u → v`. The net supply at `i` is inflow minus
//! outflow.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{Graph, Scale};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("capacity on edge {0} is negative")]
    NegativeCapacity(usize),
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("max-flow for focus {focus} is infeasible; violated set {witness:?}")]
    Infeasible { focus: usize, witness: Vec<usize> },
    #[error("certificates do not match: {0}")]
    Mismatch(String),
    #[error("malformed certificate: {0}")]
    Parse(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Demands, capacities and one pseudo-flow per focus vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowCertificate {
    pub eta: Vec<Rational>,
    /// Indexed like [`Graph::edges`].
    pub kappa: Vec<Rational>,
    /// `flows[k][e]`; absent edges carry zero.
    pub flows: Vec<BTreeMap<usize, Rational>>,
}

impl FlowCertificate {
    pub fn objective(&self) -> Rational {
        self.eta.iter().sum()
    }

    /// Net supply of flow `k` at every vertex.
    pub fn supplies(&self, g: &Graph, k: usize) -> Vec<Rational> {
        net_supply(g, &self.flows[k])
    }

    pub fn to_json(&self, g: &Graph) -> Value {
        let key = |e: usize| {
            let (u, v) = g.edges()[e];
            format!("{u}-{v}")
        };
        let eta: Map<String, Value> =
            self.eta.iter().enumerate().map(|(i, x)| (i.to_string(), json!(x.to_string()))).collect();
        let kappa: Map<String, Value> =
            self.kappa.iter().enumerate().map(|(e, x)| (key(e), json!(x.to_string()))).collect();
        let flows: Map<String, Value> = self
            .flows
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let m: Map<String, Value> = f.iter().map(|(e, x)| (key(*e), json!(x.to_string()))).collect();
                (k.to_string(), Value::Object(m))
            })
            .collect();
        json!({
            "objective": self.objective().to_string(),
            "eta": eta,
            "kappa": kappa,
            "flows": flows,
        })
    }

    pub fn from_json(v: &Value, g: &Graph) -> Result<FlowCertificate, FlowError> {
        let n = g.vertex_count();
        let obj = |name: &str| {
            v.get(name)
                .and_then(Value::as_object)
                .ok_or_else(|| FlowError::Parse(format!("missing object {name:?}")))
        };
        let edge_of = |s: &str| -> Result<usize, FlowError> {
            let (a, b) = s.split_once('-').ok_or_else(|| FlowError::Parse(format!("bad edge key {s:?}")))?;
            let a: usize = a.parse().map_err(|_| FlowError::Parse(format!("bad edge key {s:?}")))?;
            let b: usize = b.parse().map_err(|_| FlowError::Parse(format!("bad edge key {s:?}")))?;
            if a >= n || b >= n {
                return Err(FlowError::Parse(format!("edge {s} out of range")));
            }
            g.edge_index(a, b).ok_or_else(|| FlowError::Parse(format!("{s} is not an edge")))
        };
        let mut eta = vec![Rational::zero(); n];
        for (k, x) in obj("eta")? {
            let i: usize = k.parse().map_err(|_| FlowError::Parse(format!("bad vertex {k:?}")))?;
            if i >= n {
                return Err(FlowError::Parse(format!("vertex {i} out of range")));
            }
            eta[i] = parse_rat(x)?;
        }
        let mut kappa = vec![Rational::zero(); g.edge_count()];
        for (k, x) in obj("kappa")? {
            kappa[edge_of(k)?] = parse_rat(x)?;
        }
        let mut flows = vec![BTreeMap::new(); n];
        for (k, f) in obj("flows")? {
            let focus: usize = k.parse().map_err(|_| FlowError::Parse(format!("bad focus {k:?}")))?;
            if focus >= n {
                return Err(FlowError::Parse(format!("focus {focus} out of range")));
            }
            let f = f.as_object().ok_or_else(|| FlowError::Parse("flow must be an object".into()))?;
            for (e, x) in f {
                flows[focus].insert(edge_of(e)?, parse_rat(x)?);
            }
        }
        Ok(FlowCertificate { eta, kappa, flows })
    }
}

fn parse_rat(v: &Value) -> Result<Rational, FlowError> {
    v.as_str()
        .ok_or_else(|| FlowError::Parse(format!("expected a \"p/q\" string, got {v}")))?
        .parse()
        .map_err(|e| FlowError::Parse(format!("{e}")))
}

/// Probability measures `ξ_i` and the claimed variation bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureFamily {
    pub epsilon: Rational,
    pub xi: Vec<BTreeMap<usize, Rational>>,
}

impl MeasureFamily {
    /// Uniform measure on each scale set.
    pub fn uniform(g: &Graph, sc: &Scale) -> MeasureFamily {
        let xi: Vec<BTreeMap<usize, Rational>> = sc
            .sets
            .iter()
            .map(|s| {
                let w = Rational::new(1, s.len() as i64);
                s.iter().map(|&j| (j, w.clone())).collect()
            })
            .collect();
        let epsilon = g
            .edges()
            .iter()
            .map(|&(u, v)| l1_distance(&xi[u], &xi[v]))
            .max()
            .unwrap_or_else(Rational::zero);
        MeasureFamily { epsilon, xi }
    }
}

pub fn l1_distance(a: &BTreeMap<usize, Rational>, b: &BTreeMap<usize, Rational>) -> Rational {
    let mut total = Rational::zero();
    for (k, x) in a {
        total += (x - &b.get(k).cloned().unwrap_or_default()).abs();
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            total += y.abs();
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFunction {
    /// Index of the scale set containing the support.
    pub tag: usize,
    pub values: BTreeMap<usize, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFamily {
    pub functions: Vec<PartitionFunction>,
    pub flat: bool,
    pub variation: Rational,
}

impl PartitionFamily {
    /// Summed variation of all functions across each edge.
    pub fn edge_variations(&self, g: &Graph) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); g.edge_count()];
        for f in &self.functions {
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                let a = f.values.get(&u).cloned().unwrap_or_default();
                let b = f.values.get(&v).cloned().unwrap_or_default();
                out[e] += (a - b).abs();
            }
        }
        out
    }
}

/// Outcome of a verifier: every violation found, plus summary values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub violations: Vec<String>,
    /// `Ση` for flow certificates, the largest edge variation otherwise.
    pub value: Rational,
}

impl VerifyReport {
    fn new(violations: Vec<String>, value: Rational) -> Self {
        VerifyReport { ok: violations.is_empty(), violations, value }
    }
}

fn net_supply(g: &Graph, flow: &BTreeMap<usize, Rational>) -> Vec<Rational> {
    let mut s = vec![Rational::zero(); g.vertex_count()];
    for (&e, phi) in flow {
        let (u, v) = g.edges()[e];
        s[v] += phi;
        s[u] -= phi;
    }
    s
}

/// Result of a single demand-feasibility max-flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowOutcome {
    /// Net flow per edge (canonical orientation), only edges touching the demand set.
    Feasible(BTreeMap<usize, Rational>),
    /// A subset of the demand set whose weighted isoperimetric inequality fails.
    Infeasible(Vec<usize>),
}

struct Network {
    to: Vec<usize>,
    residual: Vec<Rational>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network { to: Vec::new(), residual: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    /// Arc `a → b` with capacity `fwd` and its partner `b → a` with `back`.
    fn add_pair(&mut self, a: usize, b: usize, fwd: Rational, back: Rational) -> usize {
        let id = self.to.len();
        self.to.push(b);
        self.residual.push(fwd);
        self.adj[a].push(id);
        self.to.push(a);
        self.residual.push(back);
        self.adj[b].push(id + 1);
        id
    }

    /// Edmonds–Karp: shortest augmenting paths until none remain.
    fn max_flow(&mut self, s: usize, t: usize) -> Rational {
        let mut total = Rational::zero();
        let nodes = self.adj.len();
        loop {
            let mut via = vec![usize::MAX; nodes];
            let mut seen = vec![false; nodes];
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            'bfs: while let Some(x) = q.pop_front() {
                for &a in &self.adj[x] {
                    let y = self.to[a];
                    if !seen[y] && self.residual[a].is_positive() {
                        seen[y] = true;
                        via[y] = a;
                        if y == t {
                            break 'bfs;
                        }
                        q.push_back(y);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<Rational> = None;
            let mut y = t;
            while y != s {
                let a = via[y];
                if bottleneck.as_ref().map_or(true, |b| self.residual[a] < *b) {
                    bottleneck = Some(self.residual[a].clone());
                }
                y = self.to[a ^ 1];
            }
            let b = bottleneck.unwrap();
            let mut y = t;
            while y != s {
                let a = via[y];
                self.residual[a] -= &b;
                self.residual[a ^ 1] += &b;
                y = self.to[a ^ 1];
            }
            total += b;
        }
    }

    /// Nodes that can still push flow into `t` in the residual graph.
    fn reaching(&self, t: usize) -> Vec<bool> {
        let nodes = self.adj.len();
        let mut seen = vec![false; nodes];
        seen[t] = true;
        let mut q = VecDeque::from([t]);
        while let Some(y) = q.pop_front() {
            for &a in &self.adj[y] {
                // arc a: y -> x; its partner a^1: x -> y
                let x = self.to[a];
                if !seen[x] && self.residual[a ^ 1].is_positive() {
                    seen[x] = true;
                    q.push_back(x);
                }
            }
        }
        seen
    }
}

/// Is there a pseudo-flow with `|φ| ≤ κ` whose net supply is at least `η_i`
/// on every `i ∈ demand_set`? Vertices outside the set are unconstrained.
///
/// Either returns such a flow or a set `T ⊆ demand_set` with
/// `Σ_{i∈T} η_i > Σ_{∂T} κ`.
pub fn max_flow_feasible(
    g: &Graph,
    kappa: &[Rational],
    demand_set: &[usize],
    eta: &[Rational],
) -> Result<FlowOutcome, FlowError> {
    let n = g.vertex_count();
    if kappa.len() != g.edge_count() {
        return Err(FlowError::LengthMismatch { what: "capacities", expected: g.edge_count(), got: kappa.len() });
    }
    if eta.len() != n {
        return Err(FlowError::LengthMismatch { what: "demands", expected: n, got: eta.len() });
    }
    if let Some(e) = kappa.iter().position(Rational::is_negative) {
        return Err(FlowError::NegativeCapacity(e));
    }
    let member = g.indicator(demand_set);
    let (s, t) = (n, n + 1);
    let mut net = Network::new(n + 2);
    let positive: Rational = demand_set.iter().filter(|&&i| eta[i].is_positive()).map(|&i| &eta[i]).sum();
    let big = kappa.iter().sum::<Rational>() + &positive + Rational::one();
    let mut arcs = Vec::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if (member[u] || member[v]) && kappa[e].is_positive() {
            arcs.push((e, net.add_pair(u, v, kappa[e].clone(), kappa[e].clone())));
        }
    }
    for i in 0..n {
        if !member[i] {
            net.add_pair(s, i, big.clone(), Rational::zero());
        } else if eta[i].is_negative() {
            net.add_pair(s, i, -&eta[i], Rational::zero());
        } else if eta[i].is_positive() {
            net.add_pair(i, t, eta[i].clone(), Rational::zero());
        }
    }
    let value = net.max_flow(s, t);
    if value == positive {
        let flow = arcs
            .into_iter()
            .filter_map(|(e, a)| {
                let f = &kappa[e] - &net.residual[a];
                (!f.is_zero()).then_some((e, f))
            })
            .collect();
        Ok(FlowOutcome::Feasible(flow))
    } else {
        let reach = net.reaching(t);
        Ok(FlowOutcome::Infeasible((0..n).filter(|&i| reach[i]).collect()))
    }
}

/// Builds one pseudo-flow per focus `k` (demand set `S̄_k`) by max-flow.
/// Runs the foci in parallel; the first infeasible focus is reported.
pub fn lift_and_project(
    g: &Graph,
    dsc: &Scale,
    eta: &[Rational],
    kappa: &[Rational],
) -> Result<FlowCertificate, FlowError> {
    if dsc.len() != g.vertex_count() {
        return Err(FlowError::LengthMismatch { what: "scale sets", expected: g.vertex_count(), got: dsc.len() });
    }
    let outcomes: Vec<Result<FlowOutcome, FlowError>> = dsc
        .sets
        .par_iter()
        .map(|set| max_flow_feasible(g, kappa, set, eta))
        .collect();
    let mut flows = Vec::with_capacity(g.vertex_count());
    for (k, o) in outcomes.into_iter().enumerate() {
        match o? {
            FlowOutcome::Feasible(f) => flows.push(f),
            FlowOutcome::Infeasible(witness) => return Err(FlowError::Infeasible { focus: k, witness }),
        }
    }
    Ok(FlowCertificate { eta: eta.to_vec(), kappa: kappa.to_vec(), flows })
}

/// Checks capacities, flow bounds and demands exactly; `claimed` is compared
/// with `Ση` when given.
pub fn verify_flow_certificate(
    g: &Graph,
    dsc: &Scale,
    fc: &FlowCertificate,
    claimed: Option<&Rational>,
) -> VerifyReport {
    let mut bad = Vec::new();
    let n = g.vertex_count();
    if fc.eta.len() != n || fc.kappa.len() != g.edge_count() || fc.flows.len() != n || dsc.len() != n {
        bad.push("dimension mismatch".to_string());
        return VerifyReport::new(bad, Rational::zero());
    }
    for (e, k) in fc.kappa.iter().enumerate() {
        if k.is_negative() {
            bad.push(format!("kappa[{e}] = {k} < 0"));
        }
    }
    let total: Rational = fc.kappa.iter().sum();
    if total > Rational::one() {
        bad.push(format!("total capacity {total} > 1"));
    }
    for (k, flow) in fc.flows.iter().enumerate() {
        for (&e, phi) in flow {
            if e >= g.edge_count() {
                bad.push(format!("flow {k} uses unknown edge {e}"));
                continue;
            }
            if phi.abs() > fc.kappa[e] {
                let (u, v) = g.edges()[e];
                bad.push(format!("|phi[{k}][{u}-{v}]| = {} > kappa {}", phi.abs(), fc.kappa[e]));
            }
        }
        if flow.keys().any(|&e| e >= g.edge_count()) {
            continue;
        }
        let s = net_supply(g, flow);
        for &i in &dsc.sets[k] {
            if s[i] < fc.eta[i] {
                bad.push(format!("supply[{k}][{i}] = {} < eta {}", s[i], fc.eta[i]));
            }
        }
    }
    let value = fc.objective();
    if let Some(c) = claimed {
        if *c != value {
            bad.push(format!("claimed objective {c} but sum of eta is {value}"));
        }
    }
    VerifyReport::new(bad, value)
}

pub fn verify_measure_family(g: &Graph, sc: &Scale, mf: &MeasureFamily) -> VerifyReport {
    let mut bad = Vec::new();
    let n = g.vertex_count();
    if mf.xi.len() != n || sc.len() != n {
        bad.push("dimension mismatch".to_string());
        return VerifyReport::new(bad, Rational::zero());
    }
    for (i, m) in mf.xi.iter().enumerate() {
        let mut total = Rational::zero();
        for (&j, x) in m {
            if x.is_negative() {
                bad.push(format!("xi[{i}][{j}] = {x} < 0"));
            }
            if !x.is_zero() && (j >= n || !sc.contains(i, j)) {
                bad.push(format!("xi[{i}] has mass at {j} outside its scale set"));
            }
            total += x;
        }
        if total != Rational::one() {
            bad.push(format!("xi[{i}] has total mass {total}"));
        }
    }
    let mut worst = Rational::zero();
    for &(u, v) in g.edges() {
        let d = l1_distance(&mf.xi[u], &mf.xi[v]);
        if d > mf.epsilon {
            bad.push(format!("variation on {u}-{v} is {d} > {}", mf.epsilon));
        }
        worst = worst.max(d);
    }
    VerifyReport::new(bad, worst)
}

pub fn verify_partition(g: &Graph, sc: &Scale, pf: &PartitionFamily) -> VerifyReport {
    let mut bad = Vec::new();
    let n = g.vertex_count();
    let mut sum = vec![Rational::zero(); n];
    for (idx, f) in pf.functions.iter().enumerate() {
        if f.tag >= sc.len() {
            bad.push(format!("function {idx} has unknown tag {}", f.tag));
            continue;
        }
        let mut level: Option<&Rational> = None;
        for (&j, x) in &f.values {
            if j >= n {
                bad.push(format!("function {idx} defined at unknown vertex {j}"));
                continue;
            }
            if x.is_negative() {
                bad.push(format!("function {idx} is {x} < 0 at {j}"));
            }
            if !x.is_zero() {
                if !sc.contains(f.tag, j) {
                    bad.push(format!("function {idx} leaves scale set {} at {j}", f.tag));
                }
                if pf.flat && level.is_some_and(|l| l != x) {
                    bad.push(format!("function {idx} is not flat"));
                }
                level = Some(x);
            }
            sum[j] += x;
        }
    }
    for (j, s) in sum.iter().enumerate() {
        if *s != Rational::one() {
            bad.push(format!("functions sum to {s} at {j}"));
        }
    }
    let vars = pf.edge_variations(g);
    let mut worst = Rational::zero();
    for (e, x) in vars.into_iter().enumerate() {
        if x > pf.variation {
            let (u, v) = g.edges()[e];
            bad.push(format!("variation on {u}-{v} is {x} > {}", pf.variation));
        }
        worst = worst.max(x);
    }
    VerifyReport::new(bad, worst)
}

/// `Ση ≤ ε` for a valid primal/dual pair on the same graph.
pub fn weak_duality_check(
    g: &Graph,
    sc: &Scale,
    dsc: &Scale,
    mf: &MeasureFamily,
    fc: &FlowCertificate,
) -> Result<bool, FlowError> {
    let p = verify_measure_family(g, sc, mf);
    if !p.ok {
        return Err(FlowError::Mismatch(format!("primal invalid: {}", p.violations.join("; "))));
    }
    let d = verify_flow_certificate(g, dsc, fc, None);
    if !d.ok {
        return Err(FlowError::Mismatch(format!("dual invalid: {}", d.violations.join("; "))));
    }
    Ok(fc.objective() <= mf.epsilon)
}

/// Level-set slicing: each function with values `0 < y_1 < … < y_r` becomes
/// slices `(y_t − y_{t−1}) · χ{f ≥ y_t}`. Per-edge variation is unchanged.
pub fn flatten_partition(pf: &PartitionFamily) -> PartitionFamily {
    let mut functions = Vec::new();
    for f in &pf.functions {
        let mut levels: Vec<&Rational> = f.values.values().filter(|x| x.is_positive()).collect();
        levels.sort();
        levels.dedup();
        let mut prev = Rational::zero();
        for y in levels {
            let h = y - &prev;
            let values = f
                .values
                .iter()
                .filter(|(_, x)| *x >= y)
                .map(|(&j, _)| (j, h.clone()))
                .collect();
            functions.push(PartitionFunction { tag: f.tag, values });
            prev = y.clone();
        }
    }
    PartitionFamily { functions, flat: true, variation: pf.variation.clone() }
}

/// `f_j(i) = ξ_i(j)`: function `j` is supported on the dual scale set `S̄_j`.
pub fn partition_from_measures(mf: &MeasureFamily) -> PartitionFamily {
    let n = mf.xi.len();
    let mut f: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
    for (i, m) in mf.xi.iter().enumerate() {
        for (&j, x) in m {
            if !x.is_zero() {
                f[j].insert(i, x.clone());
            }
        }
    }
    PartitionFamily {
        functions: f.into_iter().enumerate().map(|(tag, values)| PartitionFunction { tag, values }).collect(),
        flat: false,
        variation: mf.epsilon.clone(),
    }
}

/// Inverse of [`partition_from_measures`]; functions sharing a tag are summed.
pub fn measures_from_partition(pf: &PartitionFamily, n: usize) -> Result<MeasureFamily, FlowError> {
    let mut xi: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
    for f in &pf.functions {
        if f.tag >= n {
            return Err(FlowError::InvalidPartition(format!("tag {} out of range", f.tag)));
        }
        for (&i, x) in &f.values {
            if i >= n {
                return Err(FlowError::InvalidPartition(format!("vertex {i} out of range")));
            }
            if !x.is_zero() {
                *xi[i].entry(f.tag).or_default() += x;
            }
        }
    }
    Ok(MeasureFamily { epsilon: pf.variation.clone(), xi })
}
