//! Graph invariants on top of the LP and flow layers, closed forms, and the
//! explicit cube certificate.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::flows::{
    lift_and_project, max_flow_feasible, measures_from_partition, verify_flow_certificate, verify_measure_family,
    FlowCertificate, FlowError, FlowOutcome, MeasureFamily,
};
use crate::graph::{ball_scale, dual_scale, hypercube, is_convex_subgraph, Graph, GraphError, Scale};
use crate::lp::SolveStats;
use crate::problems::{
    build_fixed_capacity_flows, build_isoperimetric, build_mean_property_a, build_measures, build_pseudo_flows,
    build_uniform_flows, enumerate_subsets, flat_partition_from_z, ProblemError, RowKey, SubsetFamily, VarKey,
};
use crate::rational::{binomial, Rational};

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    /// Two computations that must agree did not; indicates a bug.
    #[error("certificate check failed: {0}")]
    Verification(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("embedding is not convex")]
    NotConvex,
}

impl InvariantError {
    /// Size-ceiling and enumeration-cap failures, as opposed to bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            InvariantError::Problem(
                ProblemError::Lp(crate::lp::LpError::TooLarge { .. })
                    | ProblemError::CapExceeded { .. }
                    | ProblemError::TooManySubsets(_)
            )
        )
    }
}

/// A ball radius or an explicit scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScaleSpec {
    Radius(usize),
    Explicit(Scale),
}

impl From<usize> for ScaleSpec {
    fn from(s: usize) -> Self {
        ScaleSpec::Radius(s)
    }
}

impl From<Scale> for ScaleSpec {
    fn from(s: Scale) -> Self {
        ScaleSpec::Explicit(s)
    }
}

impl ScaleSpec {
    pub fn resolve(&self, g: &Graph) -> Result<Scale, InvariantError> {
        match self {
            ScaleSpec::Radius(s) => Ok(ball_scale(g, *s)),
            ScaleSpec::Explicit(sc) => {
                if sc.len() != g.vertex_count() {
                    return Err(GraphError::ScaleLength { expected: g.vertex_count(), got: sc.len() }.into());
                }
                Ok(Scale::new(g.vertex_count(), sc.sets.clone())?)
            }
        }
    }

    pub fn radius(&self) -> Option<usize> {
        match self {
            ScaleSpec::Radius(s) => Some(*s),
            ScaleSpec::Explicit(sc) => sc.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMethod {
    /// Solve the measures LP; the dual comes from its row prices.
    Primal,
    /// Solve the pseudo-flows LP; the primal comes from its row prices.
    Dual,
    /// Solve both and insist they agree.
    Both,
    /// Cutting planes on the isoperimetric LP with max-flow separation.
    Separation,
}

impl FromStr for EpsilonMethod {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "primal" => Ok(EpsilonMethod::Primal),
            "dual" => Ok(EpsilonMethod::Dual),
            "both" => Ok(EpsilonMethod::Both),
            "separation" | "sep" => Ok(EpsilonMethod::Separation),
            other => Err(InvariantError::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolveRecord {
    pub problem: String,
    pub stats: SolveStats,
}

#[derive(Debug, Clone)]
pub struct EpsilonReport {
    pub epsilon: Rational,
    pub primal: MeasureFamily,
    pub dual: FlowCertificate,
    pub scale: Scale,
    pub radius: Option<usize>,
    pub method: EpsilonMethod,
    pub solves: Vec<SolveRecord>,
    /// Cutting-plane rounds and final inequality count (separation only).
    pub rounds: usize,
    pub inequalities: usize,
}

impl EpsilonReport {
    pub fn to_json(&self, g: &Graph) -> Value {
        json!({
            "epsilon": self.epsilon.to_string(),
            "method": self.method,
            "radius": self.radius,
            "scale": self.scale,
            "primal": self.primal,
            "dual": self.dual.to_json(g),
            "stats": {
                "solves": self.solves,
                "rounds": self.rounds,
                "inequalities": self.inequalities,
            },
        })
    }
}

fn record(problem: &str, stats: &SolveStats) -> SolveRecord {
    SolveRecord { problem: problem.to_string(), stats: stats.clone() }
}

fn check_pair(g: &Graph, sc: &Scale, dsc: &Scale, mf: &MeasureFamily, fc: &FlowCertificate) -> Result<(), InvariantError> {
    let p = verify_measure_family(g, sc, mf);
    if !p.ok {
        return Err(InvariantError::Verification(format!("primal: {}", p.violations.join("; "))));
    }
    let d = verify_flow_certificate(g, dsc, fc, Some(&mf.epsilon));
    if !d.ok {
        return Err(InvariantError::Verification(format!("dual: {}", d.violations.join("; "))));
    }
    Ok(())
}

struct Solved {
    epsilon: Rational,
    primal: MeasureFamily,
    dual: FlowCertificate,
    solves: Vec<SolveRecord>,
    rounds: usize,
    inequalities: usize,
}

fn via_measures(g: &Graph, sc: &Scale, dsc: &Scale) -> Result<Solved, InvariantError> {
    let ilp = build_measures(g, sc)?;
    let sol = ilp.solve_optimal()?;
    let xi = sc
        .sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.iter()
                .map(|&j| (j, ilp.value(&sol, VarKey::X(i, j))))
                .filter(|(_, x)| !x.is_zero())
                .collect()
        })
        .collect();
    let eta: Vec<Rational> = (0..g.vertex_count()).map(|i| ilp.dual(&sol, RowKey::RowSum(i))).collect();
    let kappa: Vec<Rational> = (0..g.edge_count()).map(|e| -ilp.dual(&sol, RowKey::EdgeTotal(e))).collect();
    let dual = lift_and_project(g, dsc, &eta, &kappa)?;
    let epsilon = sol.objective_value.clone();
    Ok(Solved {
        primal: MeasureFamily { epsilon: epsilon.clone(), xi },
        dual,
        epsilon,
        solves: vec![record("measures", &sol.stats)],
        rounds: 0,
        inequalities: 0,
    })
}

fn via_pseudo_flows(g: &Graph, sc: &Scale, dsc: &Scale) -> Result<Solved, InvariantError> {
    let n = g.vertex_count();
    let ilp = build_pseudo_flows(g, dsc)?;
    let sol = ilp.solve_optimal()?;
    let eta: Vec<Rational> = (0..n).map(|i| ilp.value(&sol, VarKey::Eta(i))).collect();
    let kappa: Vec<Rational> = (0..g.edge_count()).map(|e| ilp.value(&sol, VarKey::Kappa(e))).collect();
    let flows = (0..n)
        .map(|k| {
            (0..g.edge_count())
                .map(|e| (e, ilp.value(&sol, VarKey::Phi(k, e))))
                .filter(|(_, x)| !x.is_zero())
                .collect()
        })
        .collect();
    let mut xi: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
    for (i, m) in xi.iter_mut().enumerate() {
        for &k in &sc.sets[i] {
            let x = -ilp.dual(&sol, RowKey::Supply(k, i));
            if !x.is_zero() {
                m.insert(k, x);
            }
        }
    }
    let epsilon = sol.objective_value.clone();
    Ok(Solved {
        primal: MeasureFamily { epsilon: epsilon.clone(), xi },
        dual: FlowCertificate { eta, kappa, flows },
        epsilon,
        solves: vec![record("pseudo_flows", &sol.stats)],
        rounds: 0,
        inequalities: 0,
    })
}

fn via_separation(g: &Graph, dsc: &Scale) -> Result<Solved, InvariantError> {
    let n = g.vertex_count();
    let mut items: Vec<(Vec<usize>, usize)> = (0..n).map(|i| (vec![i], i)).collect();
    let mut solves = Vec::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let family = SubsetFamily::from_subsets(g, dsc, items.clone())?;
        let ilp = build_isoperimetric(g, dsc, &family)?;
        let sol = ilp.solve_optimal()?;
        solves.push(record("isoperimetric", &sol.stats));
        let eta: Vec<Rational> = (0..n).map(|i| ilp.value(&sol, VarKey::Eta(i))).collect();
        let kappa: Vec<Rational> = (0..g.edge_count()).map(|e| ilp.value(&sol, VarKey::Kappa(e))).collect();
        let outcomes: Vec<Result<FlowOutcome, FlowError>> =
            dsc.sets.par_iter().map(|set| max_flow_feasible(g, &kappa, set, &eta)).collect();
        let before = family.len();
        let mut added = false;
        let mut flows = Vec::with_capacity(n);
        for (k, o) in outcomes.into_iter().enumerate() {
            match o? {
                FlowOutcome::Feasible(f) => flows.push(f),
                FlowOutcome::Infeasible(t) => {
                    if !family.subsets.contains(&t) {
                        items.push((t, k));
                        added = true;
                    }
                }
            }
        }
        if added {
            continue;
        }
        if flows.len() < n {
            return Err(InvariantError::Verification("separation repeated a known inequality".into()));
        }
        let z: BTreeMap<usize, Rational> = (0..family.len())
            .map(|t| (t, ilp.dual(&sol, RowKey::Cut(t))))
            .filter(|(_, w)| !w.is_zero())
            .collect();
        let a = ilp.dual(&sol, RowKey::Capacity);
        let epsilon = sol.objective_value.clone();
        if a != epsilon {
            return Err(InvariantError::Verification(format!("capacity price {a} differs from optimum {epsilon}")));
        }
        let pf = flat_partition_from_z(g, dsc, &family, &z, &a)?;
        let primal = measures_from_partition(&pf, n)?;
        return Ok(Solved {
            primal,
            dual: FlowCertificate { eta, kappa, flows },
            epsilon,
            solves,
            rounds,
            inequalities: before,
        });
    }
}

/// `ε` at the given scale with verified primal and dual certificates.
pub fn epsilon_at_scale(
    g: &Graph,
    scale: impl Into<ScaleSpec>,
    method: EpsilonMethod,
) -> Result<EpsilonReport, InvariantError> {
    let spec = scale.into();
    let sc = spec.resolve(g)?;
    let dsc = dual_scale(&sc)?;
    let solved = match method {
        EpsilonMethod::Primal => via_measures(g, &sc, &dsc)?,
        EpsilonMethod::Dual => via_pseudo_flows(g, &sc, &dsc)?,
        EpsilonMethod::Separation => via_separation(g, &dsc)?,
        EpsilonMethod::Both => {
            let p = via_measures(g, &sc, &dsc)?;
            let d = via_pseudo_flows(g, &sc, &dsc)?;
            if p.epsilon != d.epsilon {
                return Err(InvariantError::Verification(format!(
                    "measures optimum {} but pseudo-flows optimum {}",
                    p.epsilon, d.epsilon
                )));
            }
            Solved {
                epsilon: p.epsilon,
                primal: p.primal,
                dual: d.dual,
                solves: p.solves.into_iter().chain(d.solves).collect(),
                rounds: 0,
                inequalities: 0,
            }
        }
    };
    check_pair(g, &sc, &dsc, &solved.primal, &solved.dual)?;
    Ok(EpsilonReport {
        epsilon: solved.epsilon,
        primal: solved.primal,
        dual: solved.dual,
        radius: spec.radius(),
        scale: sc,
        method,
        solves: solved.solves,
        rounds: solved.rounds,
        inequalities: solved.inequalities,
    })
}

/// `ε` values for a family of graphs at a common radius, in parallel.
pub fn epsilon_sequence(graphs: &[Graph], s: usize, method: EpsilonMethod) -> Result<Vec<Rational>, InvariantError> {
    graphs
        .par_iter()
        .map(|g| epsilon_at_scale(g, s, method).map(|r| r.epsilon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheegerMethod {
    /// Uniform-flows optimum scaled by `|E|/|V|`; no witness.
    Lp,
    /// Enumerate connected subsets of the dual-scale sets.
    BruteForce,
}

impl FromStr for CheegerMethod {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(CheegerMethod::Lp),
            "brute" | "bruteforce" | "brute-force" => Ok(CheegerMethod::BruteForce),
            other => Err(InvariantError::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheegerReport {
    pub gamma: Rational,
    pub witness: Option<Vec<usize>>,
    pub radius: Option<usize>,
    pub method: CheegerMethod,
}

/// Smallest weighted boundary ratio over connected subsets of the dual-scale
/// sets. Ties go to the smaller subset, then the lexicographically first.
fn min_ratio(
    g: &Graph,
    dsc: &Scale,
    cap: usize,
    weight: &dyn Fn(usize) -> Rational,
) -> Result<(Rational, Vec<usize>), InvariantError> {
    let family = enumerate_subsets(g, dsc, true, cap)?;
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for t in family.subsets {
        let b: Rational = g.boundary_of(&t).into_iter().map(weight).sum();
        let r = b / Rational::from(t.len());
        let better = match &best {
            None => true,
            Some((v, w)) => r < *v || (r == *v && (t.len(), &t) < (w.len(), w)),
        };
        if better {
            best = Some((r, t));
        }
    }
    best.ok_or_else(|| InvariantError::InvalidParameter("graph has no vertices".into()))
}

/// `γ(G, 𝒮̄)`: the least `|∂T|/|T|` over nonempty `T` inside a dual-scale set.
pub fn cheeger_at_scale(
    g: &Graph,
    scale: impl Into<ScaleSpec>,
    method: CheegerMethod,
    cap: usize,
) -> Result<CheegerReport, InvariantError> {
    let spec = scale.into();
    let sc = spec.resolve(g)?;
    let dsc = dual_scale(&sc)?;
    let (gamma, witness) = match method {
        CheegerMethod::BruteForce => {
            let (v, t) = min_ratio(g, &dsc, cap, &|_| Rational::one())?;
            (v, Some(t))
        }
        CheegerMethod::Lp => {
            let sol = build_uniform_flows(g, &dsc)?.solve_optimal()?;
            let scale = Rational::new(g.edge_count() as i64, g.vertex_count() as i64);
            (sol.objective_value * scale, None)
        }
    };
    Ok(CheegerReport { gamma, witness, radius: spec.radius(), method })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparsestCut {
    pub value: Rational,
    pub witness: Vec<usize>,
}

/// Least `Σ_{∂T} κ / |T|` over nonempty `T` inside a dual-scale set.
pub fn sparsest_cut_at_scale(
    g: &Graph,
    scale: impl Into<ScaleSpec>,
    kappa: &[Rational],
    cap: usize,
) -> Result<SparsestCut, InvariantError> {
    if kappa.len() != g.edge_count() {
        return Err(InvariantError::InvalidParameter(format!(
            "{} capacities for {} edges",
            kappa.len(),
            g.edge_count()
        )));
    }
    if let Some(e) = kappa.iter().position(Rational::is_negative) {
        return Err(FlowError::NegativeCapacity(e).into());
    }
    let sc = scale.into().resolve(g)?;
    let dsc = dual_scale(&sc)?;
    let (value, witness) = min_ratio(g, &dsc, cap, &|e| kappa[e].clone())?;
    Ok(SparsestCut { value, witness })
}

/// Optimum of the uniform-flows LP at the dual scale; zero without edges.
pub fn uniform_flows_value(g: &Graph, scale: impl Into<ScaleSpec>) -> Result<Rational, InvariantError> {
    if g.edge_count() == 0 {
        return Ok(Rational::zero());
    }
    let sc = scale.into().resolve(g)?;
    let dsc = dual_scale(&sc)?;
    Ok(build_uniform_flows(g, &dsc)?.solve_optimal()?.objective_value)
}

/// Optimum of the mean-property-A LP; zero without edges.
pub fn mean_property_a_value(g: &Graph, scale: impl Into<ScaleSpec>) -> Result<Rational, InvariantError> {
    if g.edge_count() == 0 {
        return Ok(Rational::zero());
    }
    let sc = scale.into().resolve(g)?;
    Ok(build_mean_property_a(g, &sc)?.solve_optimal()?.objective_value)
}

/// Pseudo-flows optimum with every capacity pinned to `kappa`.
pub fn fixed_capacity_value(
    g: &Graph,
    scale: impl Into<ScaleSpec>,
    kappa: &[Rational],
) -> Result<Rational, InvariantError> {
    let sc = scale.into().resolve(g)?;
    let dsc = dual_scale(&sc)?;
    Ok(build_fixed_capacity_flows(g, &dsc, kappa)?.solve_optimal()?.objective_value)
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn ball_volume(n: i64, s: i64) -> BigInt {
    (0..=s).map(|k| binomial(n, k)).sum()
}

/// `2·C(n−1, s) / Σ_{k≤s} C(n, k)`.
pub fn cube_epsilon_formula(n: u32, s: u32) -> Rational {
    let (n, s) = (n as i64, s as i64);
    let den = ball_volume(n, s);
    if den == big(0) {
        return Rational::zero();
    }
    Rational::from_bigints(big(2) * binomial(n - 1, s), den)
}

fn require_degree(d: u32) -> Result<(), InvariantError> {
    if d < 3 {
        return Err(InvariantError::InvalidParameter(format!("degree {d} < 3")));
    }
    Ok(())
}

/// `2(d−1)^s (2−d) / (2 − d(d−1)^s)` for `d`-regular graphs of girth above `2s+1`.
pub fn girth_epsilon_formula(d: u32, s: u32) -> Result<Rational, InvariantError> {
    require_degree(d)?;
    let d = big(d as i64);
    let p = num_traits::pow(&d - 1, s as usize);
    Ok(Rational::from_bigints(big(2) * &p * (big(2) - &d), big(2) - &d * &p))
}

/// `(2−d) d (d−1)^s / (2 − d(d−1)^s)`.
pub fn girth_cheeger_formula(d: u32, s: u32) -> Result<Rational, InvariantError> {
    require_degree(d)?;
    let d = big(d as i64);
    let p = num_traits::pow(&d - 1, s as usize);
    Ok(Rational::from_bigints((big(2) - &d) * &d * &p, big(2) - &d * &p))
}

/// `((d−2)n + 2k)/n` for an `n`-vertex subset of a `d`-regular tree whose
/// induced forest has `k` components.
pub fn tree_isoperimetric_number(d: u32, n: u32, k: u32) -> Result<Rational, InvariantError> {
    require_degree(d)?;
    if n == 0 || k == 0 || k > n {
        return Err(InvariantError::InvalidParameter(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    let (d, n, k) = (d as i64, n as i64, k as i64);
    Ok(Rational::new((d - 2) * n + 2 * k, n))
}

/// `w_m = C(n, m+1)(m+1) / Σ_{k≤m} C(n, k)` for `m = 0..=s`: the number of
/// edges leaving the `m`-ball per enclosed vertex.
pub fn cube_layer_weights(n: u32, s: u32) -> Vec<Rational> {
    let n = n as i64;
    (0..=s as i64)
        .map(|m| Rational::from_bigints(binomial(n, m + 1) * big(m + 1), ball_volume(n, m)))
        .collect()
}

/// The symmetric certificate for `Q_n` at radius `s < n`: unit-share
/// capacities, the boundary of every ball saturated inward, and each sphere of
/// the ball passing on exactly what the sphere inside it consumes.
pub fn cube_dual_certificate(n: u32, s: u32) -> Result<FlowCertificate, InvariantError> {
    if s >= n {
        return Err(InvariantError::InvalidParameter(format!("need s < n, got n={n}, s={s}")));
    }
    let g = hypercube(n as usize)?;
    let (ni, si) = (n as i64, s as i64);
    let edges = Rational::from(g.edge_count());
    let kappa = Rational::one() / edges;
    let eta = &kappa * &Rational::from_bigints(binomial(ni, si + 1) * big(si + 1), ball_volume(ni, si));
    // inward flow on each edge from sphere m+1 to sphere m
    let layer: Vec<Rational> = (0..=si)
        .map(|m| &eta * &Rational::from_bigints(ball_volume(ni, m), binomial(ni, m + 1) * big(m + 1)))
        .collect();
    let flows = (0..g.vertex_count())
        .map(|k| {
            let mut f = BTreeMap::new();
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                let du = (u ^ k).count_ones() as i64;
                let dv = (v ^ k).count_ones() as i64;
                let m = du.min(dv);
                if m > si {
                    continue;
                }
                let x = layer[m as usize].clone();
                // u < v: positive means u -> v, i.e. u is the outer endpoint
                f.insert(e, if du > dv { x } else { -x });
            }
            f
        })
        .collect();
    Ok(FlowCertificate { eta: vec![eta; g.vertex_count()], kappa: vec![kappa; g.edge_count()], flows })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgraphCheck {
    pub eps_h_doubled: Rational,
    pub eps_g: Rational,
    pub holds: bool,
}

/// Solves `ε_{2s}(H)` and `ε_s(G)` for a convex embedding `H ⊆ G`.
pub fn subgraph_scale_inequality_check(
    h: &Graph,
    g: &Graph,
    embedding: &[usize],
    s: usize,
    method: EpsilonMethod,
) -> Result<SubgraphCheck, InvariantError> {
    if !is_convex_subgraph(h, g, embedding)? {
        return Err(InvariantError::NotConvex);
    }
    let eps_h_doubled = epsilon_at_scale(h, 2 * s, method)?.epsilon;
    let eps_g = epsilon_at_scale(g, s, method)?.epsilon;
    Ok(SubgraphCheck { holds: eps_h_doubled <= eps_g, eps_h_doubled, eps_g })
}
