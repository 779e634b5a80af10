mod common;

use proptest::prelude::*;
use propa_core::flows::{verify_flow_certificate, verify_measure_family};
use propa_core::graph::{ball_scale, dual_scale};
use propa_core::invariants::{
    cheeger_at_scale, epsilon_at_scale, mean_property_a_value, uniform_flows_value, CheegerMethod, EpsilonMethod,
};
use propa_core::{Graph, Rational};

fn arb_graph() -> impl Strategy<Value = Graph> {
    (3usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let m = pairs.len();
        (Just(n), Just(pairs), proptest::collection::vec(any::<bool>(), m))
    })
    .prop_map(|(n, pairs, keep)| {
        let edges = pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
        Graph::new(n, edges, None).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn methods_agree_and_certify(g in arb_graph(), s in 0usize..3) {
        let both = epsilon_at_scale(&g, s, EpsilonMethod::Both).unwrap();
        let sep = epsilon_at_scale(&g, s, EpsilonMethod::Separation).unwrap();
        prop_assert_eq!(&both.epsilon, &sep.epsilon);
        let sc = ball_scale(&g, s);
        let dsc = dual_scale(&sc).unwrap();
        for rep in [&both, &sep] {
            prop_assert!(verify_measure_family(&g, &sc, &rep.primal).ok);
            prop_assert!(verify_flow_certificate(&g, &dsc, &rep.dual, Some(&rep.epsilon)).ok);
        }
        prop_assert!(both.epsilon >= Rational::zero() && both.epsilon <= Rational::from(2));
    }

    /// Larger balls never increase ε.
    #[test]
    fn epsilon_is_monotone_in_radius(g in arb_graph()) {
        let e: Vec<Rational> = (0..3).map(|s| epsilon_at_scale(&g, s, EpsilonMethod::Separation).unwrap().epsilon).collect();
        prop_assert!(e[1] <= e[0] && e[2] <= e[1]);
    }

    #[test]
    fn relaxations_are_ordered(g in arb_graph(), s in 0usize..3) {
        prop_assume!(g.edge_count() > 0);
        let mean = mean_property_a_value(&g, s).unwrap();
        let uni = uniform_flows_value(&g, s).unwrap();
        let eps = epsilon_at_scale(&g, s, EpsilonMethod::Dual).unwrap().epsilon;
        prop_assert_eq!(&mean, &uni);
        prop_assert!(uni <= eps);
        let lp = cheeger_at_scale(&g, s, CheegerMethod::Lp, 20).unwrap().gamma;
        let bf = cheeger_at_scale(&g, s, CheegerMethod::BruteForce, 20).unwrap();
        prop_assert_eq!(&lp, &bf.gamma);
        let t = bf.witness.unwrap();
        prop_assert_eq!(Rational::from(g.boundary_of(&t).len()) / Rational::from(t.len()), bf.gamma);
    }

    /// Solving twice yields byte-identical reports.
    #[test]
    fn reports_are_deterministic(g in arb_graph()) {
        let a = epsilon_at_scale(&g, 1, EpsilonMethod::Both).unwrap().to_json(&g);
        let b = epsilon_at_scale(&g, 1, EpsilonMethod::Both).unwrap().to_json(&g);
        let strip = |mut v: serde_json::Value| { v["stats"] = serde_json::Value::Null; v.to_string() };
        prop_assert_eq!(strip(a), strip(b));
    }
}
