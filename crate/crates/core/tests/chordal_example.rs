mod common;

use std::collections::BTreeMap;

use common::{chordal_demands, chordal_example, chordal_measures, r};
use propa_core::flows::{l1_distance, lift_and_project, verify_flow_certificate, verify_measure_family, MeasureFamily};
use propa_core::graph::{ball_scale, dual_scale};
use propa_core::invariants::{epsilon_at_scale, EpsilonMethod};
use propa_core::lp::{Bound, LinearProgram, Relation, Sense};
use propa_core::problems::{build_measures, enumerate_subsets, DEFAULT_SUBSET_CAP};
use propa_core::Rational;

fn tabulated() -> MeasureFamily {
    let xi = chordal_measures().into_iter().map(|col| col.into_iter().collect::<BTreeMap<_, _>>()).collect();
    MeasureFamily { epsilon: r("16/17"), xi }
}

#[test]
fn table_is_admissible_with_variation_sixteen_seventeenths() {
    let g = chordal_example();
    let sc = ball_scale(&g, 1);
    let mf = tabulated();
    let rep = verify_measure_family(&g, &sc, &mf);
    assert!(rep.ok, "{:?}", rep.violations);
    // the bound is tight on every edge but 8-9
    for &(u, v) in g.edges() {
        let d = l1_distance(&mf.xi[u], &mf.xi[v]);
        if (u, v) == (8, 9) {
            assert!(d < r("16/17"));
        } else {
            assert_eq!(d, r("16/17"), "edge {u}-{v}");
        }
    }
}

#[test]
fn table_is_feasible_in_the_measures_lp() {
    let g = chordal_example();
    let sc = ball_scale(&g, 1);
    let ilp = build_measures(&g, &sc).unwrap();
    let mf = tabulated();
    let mut x = vec![Rational::zero(); ilp.lp.num_vars()];
    for (j, key) in ilp.var_keys().iter().enumerate() {
        use propa_core::problems::VarKey;
        x[j] = match *key {
            VarKey::X(i, k) => mf.xi[i].get(&k).cloned().unwrap_or_else(Rational::zero),
            VarKey::EdgeVar(e, k) => {
                let (u, v) = g.edges()[e];
                let a = mf.xi[u].get(&k).cloned().unwrap_or_else(Rational::zero);
                let b = mf.xi[v].get(&k).cloned().unwrap_or_else(Rational::zero);
                (a - b).abs()
            }
            VarKey::E => r("16/17"),
            other => panic!("unexpected column {other:?}"),
        };
    }
    assert!(propa_core::check_feasible(&ilp.lp, &x).unwrap());
    assert_eq!(ilp.lp.evaluate(&x), r("16/17"));
}

#[test]
fn lp_optimum_is_sixteen_seventeenths() {
    let g = chordal_example();
    for m in [EpsilonMethod::Both, EpsilonMethod::Separation] {
        assert_eq!(epsilon_at_scale(&g, 1, m).unwrap().epsilon, r("16/17"));
    }
}

/// The tabulated demands admit capacities of total one satisfying every
/// isoperimetric inequality; lifting them gives a verified certificate.
#[test]
fn tabulated_demands_lift() {
    let g = chordal_example();
    let dsc = dual_scale(&ball_scale(&g, 1)).unwrap();
    let eta = chordal_demands();
    assert_eq!(eta.iter().cloned().sum::<Rational>(), r("16/17"));
    let mut lp = LinearProgram::new(Sense::Min);
    let kap: Vec<usize> = (0..g.edge_count()).map(|e| lp.add_var(format!("k{e}"), Bound::nonneg())).collect();
    lp.set_objective(kap.iter().map(|&j| (j, Rational::one())).collect());
    for t in enumerate_subsets(&g, &dsc, true, DEFAULT_SUBSET_CAP).unwrap().subsets {
        let demand: Rational = t.iter().map(|&i| eta[i].clone()).sum();
        let coeffs = g.boundary_of(&t).into_iter().map(|e| (kap[e], Rational::one())).collect();
        lp.add_constraint("cut", coeffs, Relation::Ge, demand);
    }
    let sol = propa_core::solve(&lp);
    assert!(sol.is_optimal());
    assert!(sol.objective_value <= r("1"));
    let fc = lift_and_project(&g, &dsc, &eta, &sol.assignment).unwrap();
    let rep = verify_flow_certificate(&g, &dsc, &fc, Some(&r("16/17")));
    assert!(rep.ok, "{:?}", rep.violations);
}
