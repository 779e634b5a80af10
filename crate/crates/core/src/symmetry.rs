//! Orbits of user-supplied automorphism groups and symmetry reduction of the
//! isoperimetric LP.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{max_flow_feasible, FlowError, FlowOutcome};
use crate::graph::{Graph, GraphError, Scale};
use crate::lp::{Bound, LpSolution, Relation, Sense};
use crate::problems::{
    check_scale, enumerate_subsets, IndexedLp, ProblemError, ProblemKind, RowKey, VarKey,
};
use crate::rational::Rational;

pub const GROUP_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("generator {0} is not a permutation of the vertices")]
    NotPermutation(usize),
    #[error("generator {0} does not preserve the edge set")]
    NotAutomorphism(usize),
    #[error("group closure exceeds {0} elements")]
    GroupTooLarge(usize),
    #[error("scale is not invariant under generator {0}")]
    ScaleNotInvariant(usize),
    #[error("input is infeasible for focus {0}")]
    Infeasible(usize),
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
}

/// Vertex permutations `p` with `p[i]` the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AutomorphismSet {
    pub permutations: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<Vec<Vec<usize>>>,
}

impl AutomorphismSet {
    pub fn new(permutations: Vec<Vec<usize>>) -> Self {
        AutomorphismSet { permutations, closure: None }
    }

    pub fn order(&self) -> Option<usize> {
        self.closure.as_ref().map(Vec::len)
    }
}

fn edge_image(g: &Graph, p: &[usize], e: usize) -> Option<usize> {
    let (u, v) = g.edges()[e];
    g.edge_index(p[u], p[v])
}

fn validate(g: &Graph, gens: &AutomorphismSet) -> Result<(), SymmetryError> {
    let n = g.vertex_count();
    for (idx, p) in gens.permutations.iter().enumerate() {
        let mut seen = vec![false; n];
        if p.len() != n || !p.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true)) {
            return Err(SymmetryError::NotPermutation(idx));
        }
        if (0..g.edge_count()).any(|e| edge_image(g, p, e).is_none()) {
            return Err(SymmetryError::NotAutomorphism(idx));
        }
    }
    Ok(())
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    // apply b first, then a
    b.iter().map(|&x| a[x]).collect()
}

/// The generated group, by breadth-first products with the generators.
pub fn close_group(gens: &AutomorphismSet, g: &Graph) -> Result<AutomorphismSet, SymmetryError> {
    validate(g, gens)?;
    let id: Vec<usize> = (0..g.vertex_count()).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut elements = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for s in &gens.permutations {
            let y = compose(s, &x);
            if seen.insert(y.clone()) {
                if elements.len() == GROUP_CAP {
                    return Err(SymmetryError::GroupTooLarge(GROUP_CAP));
                }
                elements.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(AutomorphismSet { permutations: gens.permutations.clone(), closure: Some(elements) })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbits {
    /// Sorted orbits, ordered by least member.
    pub vertex: Vec<Vec<usize>>,
    pub edge: Vec<Vec<usize>>,
    pub vertex_orbit: Vec<usize>,
    pub edge_orbit: Vec<usize>,
}

fn classes(n: usize, images: impl Fn(usize) -> Vec<usize>) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut orbit = vec![start];
        label[start] = id;
        let mut i = 0;
        while i < orbit.len() {
            for y in images(orbit[i]) {
                if label[y] == usize::MAX {
                    label[y] = id;
                    orbit.push(y);
                }
            }
            i += 1;
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    (out, label)
}

/// Vertex and (unoriented) edge orbits. Generators suffice, so the group need
/// not be closed.
pub fn orbits(group: &AutomorphismSet, g: &Graph) -> Result<Orbits, SymmetryError> {
    validate(g, group)?;
    let gens = &group.permutations;
    let (vertex, vertex_orbit) = classes(g.vertex_count(), |v| gens.iter().map(|p| p[v]).collect());
    let (edge, edge_orbit) =
        classes(g.edge_count(), |e| gens.iter().map(|p| edge_image(g, p, e).unwrap()).collect());
    Ok(Orbits { vertex, edge, vertex_orbit, edge_orbit })
}

fn check_invariant(g: &Graph, dsc: &Scale, group: &AutomorphismSet) -> Result<(), SymmetryError> {
    check_scale(g, dsc)?;
    for (idx, p) in group.permutations.iter().enumerate() {
        for (i, set) in dsc.sets.iter().enumerate() {
            let mut image: Vec<usize> = set.iter().map(|&v| p[v]).collect();
            image.sort_unstable();
            if image != dsc.sets[p[i]] {
                return Err(SymmetryError::ScaleNotInvariant(idx));
            }
        }
    }
    Ok(())
}

fn orbit_mean(values: &[Rational], orbits: &[Vec<usize>]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); values.len()];
    for orbit in orbits {
        let sum: Rational = orbit.iter().map(|&x| values[x].clone()).sum();
        let mean = sum / Rational::from(orbit.len());
        for &x in orbit {
            out[x] = mean.clone();
        }
    }
    out
}

/// Group average of a feasible `(η, κ)`. By orbit–stabilizer the average of
/// `γ.η` over the group is the orbit mean, which is what is computed.
pub fn average_solution(
    g: &Graph,
    dsc: &Scale,
    group: &AutomorphismSet,
    eta: &[Rational],
    kappa: &[Rational],
) -> Result<(Vec<Rational>, Vec<Rational>), SymmetryError> {
    if eta.len() != g.vertex_count() {
        return Err(SymmetryError::LengthMismatch { what: "demands", expected: g.vertex_count(), got: eta.len() });
    }
    if kappa.len() != g.edge_count() {
        return Err(SymmetryError::LengthMismatch { what: "capacities", expected: g.edge_count(), got: kappa.len() });
    }
    check_invariant(g, dsc, group)?;
    if kappa.iter().any(Rational::is_negative) || kappa.iter().sum::<Rational>() > Rational::one() {
        return Err(SymmetryError::Infeasible(0));
    }
    for (k, set) in dsc.sets.iter().enumerate() {
        if let FlowOutcome::Infeasible(_) = max_flow_feasible(g, kappa, set, eta)? {
            return Err(SymmetryError::Infeasible(k));
        }
    }
    let orb = orbits(group, g)?;
    Ok((orbit_mean(eta, &orb.vertex), orbit_mean(kappa, &orb.edge)))
}

/// The isoperimetric LP restricted to orbit-constant `(η, κ)`: one demand
/// per vertex orbit, one capacity per edge orbit, and one row per distinct
/// coefficient pattern among connected subsets of the dual-scale sets.
pub fn reduced_symmetric_lp(
    g: &Graph,
    dsc: &Scale,
    group: &AutomorphismSet,
    cap: usize,
) -> Result<IndexedLp, SymmetryError> {
    check_invariant(g, dsc, group)?;
    let orb = orbits(group, g)?;
    let family = enumerate_subsets(g, dsc, true, cap)?;
    let mut ilp = IndexedLp::new(ProblemKind::SymmetricReduced, Sense::Max);
    let eta: Vec<usize> = (0..orb.vertex.len())
        .map(|o| ilp.add_var(VarKey::EtaOrbit(o), format!("eta_o{o}"), Bound::free()))
        .collect();
    let kappa: Vec<usize> = (0..orb.edge.len())
        .map(|o| ilp.add_var(VarKey::KappaOrbit(o), format!("kappa_o{o}"), Bound::nonneg()))
        .collect();
    ilp.lp.set_objective(orb.vertex.iter().zip(&eta).map(|(o, &j)| (j, Rational::from(o.len()))).collect());
    ilp.add_row(
        RowKey::Capacity,
        "capacity".into(),
        orb.edge.iter().zip(&kappa).map(|(o, &j)| (j, Rational::from(o.len()))).collect(),
        Relation::Le,
        Rational::one(),
    );
    let mut patterns = BTreeSet::new();
    for t in &family.subsets {
        let mut pat = vec![0i64; eta.len() + kappa.len()];
        for &i in t {
            pat[orb.vertex_orbit[i]] += 1;
        }
        for e in g.boundary_of(t) {
            pat[eta.len() + orb.edge_orbit[e]] -= 1;
        }
        patterns.insert(pat);
    }
    for (t, pat) in patterns.into_iter().enumerate() {
        let coeffs = pat
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (if j < eta.len() { eta[j] } else { kappa[j - eta.len()] }, Rational::from(c)))
            .collect();
        ilp.add_row(RowKey::Cut(t), format!("cut_{t}"), coeffs, Relation::Le, Rational::zero());
    }
    Ok(ilp)
}

/// Per-vertex `η` and per-edge `κ` from a solution of the reduced LP.
pub fn expand_reduced(ilp: &IndexedLp, sol: &LpSolution, orb: &Orbits) -> (Vec<Rational>, Vec<Rational>) {
    let eta = orb.vertex_orbit.iter().map(|&o| ilp.value(sol, VarKey::EtaOrbit(o))).collect();
    let kappa = orb.edge_orbit.iter().map(|&o| ilp.value(sol, VarKey::KappaOrbit(o))).collect();
    (eta, kappa)
}

/// Common generators for the built-in families.
pub mod generators {
    /// `i -> i + 1 (mod k)` on both rings and the swap of the rings, for
    /// `circular_ladder(k)`; with `reflect`, also `i -> -i`.
    pub fn ladder(k: usize, reflect: bool) -> Vec<Vec<usize>> {
        let map = |f: &dyn Fn(usize, usize) -> (usize, usize)| -> Vec<usize> {
            (0..2 * k)
                .map(|v| {
                    let (a, b) = f(v / k, v % k);
                    a * k + b
                })
                .collect()
        };
        let mut out = vec![map(&|a, b| (a, (b + 1) % k)), map(&|a, b| (1 - a, b))];
        if reflect {
            out.push(map(&|a, b| (a, (k - b) % k)));
        }
        out
    }

    /// Coordinate transposition, coordinate cycle and a bit flip: the full
    /// hyperoctahedral group on `hypercube(n)`.
    pub fn hypercube(n: usize) -> Vec<Vec<usize>> {
        let perm = |f: &dyn Fn(usize) -> usize| -> Vec<usize> {
            (0..1usize << n)
                .map(|x| (0..n).filter(|&i| x >> i & 1 == 1).map(|i| 1 << f(i)).sum())
                .collect()
        };
        let mut out = vec![(0..1usize << n).map(|x| x ^ 1).collect()];
        if n >= 2 {
            out.push(perm(&|i| match i {
                0 => 1,
                1 => 0,
                _ => i,
            }));
            out.push(perm(&|i| (i + 1) % n));
        }
        out
    }

    /// Rotation and reflection of `cycle(k)`.
    pub fn cycle(k: usize) -> Vec<Vec<usize>> {
        vec![(0..k).map(|i| (i + 1) % k).collect(), (0..k).map(|i| (k - i) % k).collect()]
    }

    /// Generators of the order-336 automorphism group of `heawood()`.
    pub fn heawood() -> Vec<Vec<usize>> {
        vec![
            (0..14).map(|i| (i + 2) % 14).collect(),
            (0..14).map(|i| (15 - i) % 14).collect(),
            vec![0, 1, 10, 11, 12, 13, 8, 9, 4, 3, 2, 7, 6, 5],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ball_scale, circular_ladder, cycle, heawood, hypercube};
    use crate::invariants::{cheeger_at_scale, epsilon_at_scale, CheegerMethod, EpsilonMethod};
    use crate::problems::{build_pseudo_flows, DEFAULT_SUBSET_CAP};
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn closed(gens: Vec<Vec<usize>>, g: &Graph) -> AutomorphismSet {
        close_group(&AutomorphismSet::new(gens), g).unwrap()
    }

    #[test]
    fn closure_orders() {
        let q2 = hypercube(2).unwrap();
        assert_eq!(closed(vec![], &q2).order(), Some(1));
        // 0-1-3-2 is the 4-cycle
        assert_eq!(closed(vec![vec![1, 3, 0, 2]], &q2).order(), Some(4));
        let l7 = circular_ladder(7).unwrap();
        assert_eq!(closed(generators::ladder(7, false), &l7).order(), Some(14));
        assert_eq!(closed(generators::ladder(7, true), &l7).order(), Some(28));
        assert_eq!(closed(generators::heawood(), &heawood()).order(), Some(336));
        assert_eq!(closed(generators::hypercube(3), &hypercube(3).unwrap()).order(), Some(48));
    }

    #[test]
    fn closure_rejects_bad_generators() {
        let q2 = hypercube(2).unwrap();
        let bad = |p: Vec<usize>| close_group(&AutomorphismSet::new(vec![p]), &q2);
        assert!(matches!(bad(vec![0, 0, 1, 2]), Err(SymmetryError::NotPermutation(0))));
        assert!(matches!(bad(vec![0, 1]), Err(SymmetryError::NotPermutation(0))));
        assert!(matches!(bad(vec![0, 3, 2, 1]), Err(SymmetryError::NotAutomorphism(0))));
    }

    #[test]
    fn orbit_examples() {
        let l7 = circular_ladder(7).unwrap();
        let o = orbits(&AutomorphismSet::new(generators::ladder(7, true)), &l7).unwrap();
        assert_eq!(o.vertex.len(), 1);
        assert_eq!(o.edge.len(), 2);
        let sizes: BTreeSet<usize> = o.edge.iter().map(Vec::len).collect();
        assert_eq!(sizes, BTreeSet::from([7, 14]));
        let id = orbits(&AutomorphismSet::default(), &l7).unwrap();
        assert_eq!(id.vertex.len(), 14);
        assert_eq!(id.edge.len(), 21);
        let q3 = hypercube(3).unwrap();
        let o = orbits(&AutomorphismSet::new(generators::hypercube(3)), &q3).unwrap();
        assert_eq!((o.vertex.len(), o.edge.len()), (1, 1));
    }

    fn lp_optimum(g: &Graph, s: usize) -> (Vec<Rational>, Vec<Rational>, Rational) {
        let dsc = ball_scale(g, s);
        let ilp = build_pseudo_flows(g, &dsc).unwrap();
        let sol = ilp.solve_optimal().unwrap();
        let eta = (0..g.vertex_count()).map(|i| ilp.value(&sol, VarKey::Eta(i))).collect();
        let kappa = (0..g.edge_count()).map(|e| ilp.value(&sol, VarKey::Kappa(e))).collect();
        (eta, kappa, sol.objective_value)
    }

    #[test]
    fn averaging_examples() {
        let q2 = hypercube(2).unwrap();
        let dsc = ball_scale(&q2, 1);
        let (eta, kappa, opt) = lp_optimum(&q2, 1);
        let group = AutomorphismSet::new(generators::hypercube(2));
        let (e2, k2) = average_solution(&q2, &dsc, &group, &eta, &kappa).unwrap();
        assert!(e2.iter().all(|x| *x == r("1/6")));
        assert!(k2.iter().all(|x| *x == r("1/4")));
        assert_eq!(e2.iter().sum::<Rational>(), opt);
        let (e3, k3) = average_solution(&q2, &dsc, &AutomorphismSet::default(), &eta, &kappa).unwrap();
        assert_eq!((e3, k3), (eta, kappa));

        let l7 = circular_ladder(7).unwrap();
        let dsc = ball_scale(&l7, 1);
        let (eta, kappa, opt) = lp_optimum(&l7, 1);
        let group = AutomorphismSet::new(generators::ladder(7, true));
        let (e2, k2) = average_solution(&l7, &dsc, &group, &eta, &kappa).unwrap();
        assert!(e2.iter().all(|x| *x == r("1/14")));
        assert_eq!(opt, r("1"));
        let o = orbits(&group, &l7).unwrap();
        for orbit in &o.edge {
            assert!(orbit.iter().all(|&e| k2[e] == k2[orbit[0]]));
        }
        for (k, set) in dsc.sets.iter().enumerate() {
            assert!(matches!(max_flow_feasible(&l7, &k2, set, &e2).unwrap(), FlowOutcome::Feasible(_)), "{k}");
        }
    }

    #[test]
    fn averaging_rejects_bad_input() {
        let q2 = hypercube(2).unwrap();
        let dsc = ball_scale(&q2, 1);
        let group = AutomorphismSet::new(generators::hypercube(2));
        let eta = vec![r("1"); 4];
        let kappa = vec![r("1/4"); 4];
        assert!(matches!(average_solution(&q2, &dsc, &group, &eta, &kappa), Err(SymmetryError::Infeasible(_))));
        let skew = Scale::new(4, vec![vec![0, 1], vec![1], vec![2], vec![3]]).unwrap();
        let zero = vec![r("0"); 4];
        assert!(matches!(
            average_solution(&q2, &skew, &group, &zero, &zero),
            Err(SymmetryError::ScaleNotInvariant(_))
        ));
    }

    #[test]
    fn reduced_lp_on_transitive_graphs() {
        let cases: Vec<(Graph, Vec<Vec<usize>>, usize)> = vec![
            (hypercube(3).unwrap(), generators::hypercube(3), 1),
            (hypercube(3).unwrap(), generators::hypercube(3), 2),
            (cycle(7).unwrap(), generators::cycle(7), 2),
            (heawood(), generators::heawood(), 2),
        ];
        for (g, gens, s) in cases {
            let dsc = ball_scale(&g, s);
            let group = AutomorphismSet::new(gens);
            let ilp = reduced_symmetric_lp(&g, &dsc, &group, DEFAULT_SUBSET_CAP).unwrap();
            assert_eq!(ilp.lp.num_vars(), 2);
            let opt = ilp.solve_optimal().unwrap().objective_value;
            assert_eq!(opt, epsilon_at_scale(&g, s, EpsilonMethod::Both).unwrap().epsilon);
            let gamma = cheeger_at_scale(&g, s, CheegerMethod::BruteForce, DEFAULT_SUBSET_CAP).unwrap().gamma;
            let ratio = Rational::new(g.vertex_count() as i64, g.edge_count() as i64);
            assert_eq!(opt, gamma * ratio);
        }
    }

    #[test]
    fn reduced_lp_on_the_ladder() {
        let g = circular_ladder(7).unwrap();
        let dsc = ball_scale(&g, 1);
        let group = AutomorphismSet::new(generators::ladder(7, true));
        let ilp = reduced_symmetric_lp(&g, &dsc, &group, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(ilp.lp.num_vars(), 3);
        let sol = ilp.solve_optimal().unwrap();
        assert_eq!(sol.objective_value, r("1"));
        let o = orbits(&group, &g).unwrap();
        let (eta, kappa) = expand_reduced(&ilp, &sol, &o);
        assert!(eta.iter().all(|x| *x == r("1/14")));
        for (k, set) in dsc.sets.iter().enumerate() {
            assert!(matches!(max_flow_feasible(&g, &kappa, set, &eta).unwrap(), FlowOutcome::Feasible(_)), "{k}");
        }
    }

    #[test]
    fn identity_reduction_is_the_full_lp() {
        let g = cycle(6).unwrap();
        let dsc = ball_scale(&g, 1);
        let ilp = reduced_symmetric_lp(&g, &dsc, &AutomorphismSet::default(), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(ilp.lp.num_vars(), 12);
        let full = enumerate_subsets(&g, &dsc, true, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(ilp.lp.num_rows(), full.len() + 1);
        let opt = ilp.solve_optimal().unwrap().objective_value;
        assert_eq!(opt, r("2/3"));
        assert_eq!(opt, epsilon_at_scale(&g, 1, EpsilonMethod::Both).unwrap().epsilon);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Orbit means agree with the literal average over the closed group.
        #[test]
        fn orbit_mean_is_group_average(vals in proptest::collection::vec(-20i64..20, 8)) {
            let q3 = hypercube(3).unwrap();
            let group = closed(vec![generators::hypercube(3)[0].clone(), generators::hypercube(3)[2].clone()], &q3);
            let elems = group.closure.clone().unwrap();
            let eta: Vec<Rational> = vals.iter().map(|&v| Rational::from(v)).collect();
            let o = orbits(&group, &q3).unwrap();
            let mean = orbit_mean(&eta, &o.vertex);
            for i in 0..8 {
                // (γ.η)(i) = η(γ⁻¹ i); summing over all γ covers γ⁻¹ too
                let s: Rational = elems.iter().map(|p| eta[p[i]].clone()).sum();
                prop_assert_eq!(s / Rational::from(elems.len()), mean[i].clone());
            }
        }
    }
}
