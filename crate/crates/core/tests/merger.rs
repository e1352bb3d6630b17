use naeq_core::merger::{nash_with_cost, nash_with_cost_numeric, two_good_nash_with_cost};
use naeq_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prices_order_for_every_market(a in 5.0..50.0f64, b in 0.5..3.0f64, k in 0.02..0.95f64) {
        let s = MergerScenario::new(a, b, k * b).unwrap();
        let o = postmerger_outcomes(&s).unwrap();
        prop_assert!(o.notes.is_empty(), "{:?}", o.notes);
        prop_assert!(o.mc > 0.0);
        prop_assert!(o.alpha_post < o.alpha_pre && o.alpha_pre < 1.0);
        prop_assert!(o.ordering_holds, "margin {}", o.ordering_margin);
        prop_assert!(o.prices.pre > o.prices.pre_nash);
    }

    #[test]
    fn estimated_cost_rationalizes_observed_price(a in 5.0..50.0f64, b in 0.5..3.0f64, k in 0.02..0.95f64) {
        let s = MergerScenario::new(a, b, k * b).unwrap();
        let mc = estimate_marginal_cost(&s);
        let p = s.pre_price();
        // Own slope of q_i = a - b x_i + c mean(x) is c / 3 - b.
        let q = a - (s.b - s.c) * p;
        let want = p - q / (s.b - s.c / 3.0);
        prop_assert!((mc - want).abs() <= 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn mc_grows_with_substitutability() {
    let mut last = 0.0;
    for k in 1..=19 {
        let s = MergerScenario::new(20.0, 1.0, 0.05 * k as f64).unwrap();
        let mc = estimate_marginal_cost(&s);
        assert!(mc > last);
        last = mc;
    }
}

#[test]
fn cost_prediction_agrees_with_generic_solver() {
    let s = MergerScenario::new(20.0, 1.0, 0.5).unwrap();
    let mc = estimate_marginal_cost(&s);
    let closed = economist_prediction(&s).unwrap();
    let reply = nash_with_cost(&s, mc).unwrap();
    let numeric = nash_with_cost_numeric(&s, mc, &SolverSettings::default()).unwrap();
    for p in [reply, numeric] {
        assert!((p.firm1 - closed.firm1).abs() < 1e-8);
        assert!((p.merged - closed.merged).abs() < 1e-8);
    }
}

#[test]
fn merged_firm_keeps_one_price_when_free_to_split() {
    let s = MergerScenario::new(20.0, 1.0, 0.5).unwrap();
    let mc = estimate_marginal_cost(&s);
    let x = two_good_nash_with_cost(&s, mc).unwrap();
    let one = nash_with_cost(&s, mc).unwrap();
    assert!((x[1] - x[2]).abs() < 1e-6);
    assert!((x[0] - one.firm1).abs() < 1e-6 && (x[1] - one.merged).abs() < 1e-6);
}

#[test]
fn rejects_complements() {
    assert!(MergerScenario::new(20.0, 1.0, -0.1).is_err());
    assert!(MergerScenario::new(20.0, 1.0, 1.0).is_err());
}
