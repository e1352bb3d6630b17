mod common;

use common::{advertising, rel_gap, rng};
use naeq_core::*;
use proptest::prelude::*;

fn fast() -> NaeSettings {
    NaeSettings {
        audit: AuditMode::Skip,
        certify: false,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Each follower reacts with slope ct_j / ((1 + alpha_j) bt_j), so the
    // fixed point of alpha_i = 1 - k / (1 + alpha_j) is sqrt(1 - k) with
    // k = ct_1 ct_2 / (bt_1 bt_2).
    #[test]
    fn duopoly_bias_is_root_of_one_minus_k(
        a in [10.0..30.0f64, 10.0..30.0],
        bt in [0.5..2.0f64, 0.5..2.0],
        k in [-0.25..0.8f64, -0.25..0.8],
    ) {
        prop_assume!(k[0] * k[1] >= 0.0);
        let ct = [k[0] * bt[0], k[1] * bt[1]];
        let Ok(m) = LinearPriceMarket::duopoly_direct(a, bt, ct) else { return Ok(()) };
        let Ok(closed) = price_duopoly_nae(&m) else { return Ok(()) };
        prop_assume!(closed.demands.iter().all(|&q| q > 0.0));
        let want = (1.0 - k[0] * k[1]).sqrt();
        prop_assert!((closed.alpha_star[0] - want).abs() < 1e-12);
        let r = solve_nae(&m.spec(), &fast()).unwrap();
        prop_assert!(rel_gap(&r.alpha_star, &[want, want]) < 1e-6, "{:?} vs {want}", r.alpha_star.as_slice());
        prop_assert!(rel_gap(&r.x_star, &closed.x_star) < 1e-6);
    }
}

#[test]
fn nae_strategy_is_each_leaders_best() {
    let g = LinearPriceMarket::motivating_example().spec();
    let settings = NaeSettings::default();
    let r = solve_nae(&g, &settings).unwrap();
    assert!(r.is_verified(1e-6));
    for i in 0..2 {
        let lead = stackelberg_best(&g, i, &r.alpha_star, &settings).unwrap();
        assert!((lead.x_i - r.x_star[i]).abs() < 1e-5, "{} vs {}", lead.x_i, r.x_star[i]);
        assert!(r.stackelberg_gaps[i] >= -1e-6);
    }
}

#[test]
fn substitutes_underestimate_elasticity_and_gain() {
    let m = LinearPriceMarket::motivating_example();
    let r = solve_nae(&m.spec(), &NaeSettings::default()).unwrap();
    let c = r.classification.as_ref().unwrap();
    assert!(c.reply_direction.holds && c.bias_direction.holds);
    assert!(r.alpha_star.iter().all(|&a| a < 1.0));
    assert!(r.x_star.iter().zip(r.nash_reference.x.iter()).all(|(x, n)| x > n));
    assert_eq!(c.pareto.observed, ParetoRelation::NaeDominates);
}

#[test]
fn symmetric_oligopoly_generic_matches_closed_form() {
    for n in [3, 4] {
        let m = LinearPriceMarket::symmetric(n, 30.0, 1.5, 0.9).unwrap();
        let closed = price_symmetric_nae(&m).unwrap();
        let r = solve_nae(&m.spec(), &fast()).unwrap();
        assert!(rel_gap(&r.alpha_star, &closed.alpha_star) < 1e-6);
        assert!(rel_gap(&r.x_star, &closed.x_star) < 1e-6);
    }
}

#[test]
fn advertising_bias_matches_closed_form() {
    let mut r = rng(5);
    for _ in 0..5 {
        let (m, closed) = advertising(&mut r);
        let g = solve_nae(&m.spec(), &fast()).unwrap();
        assert!(rel_gap(&g.alpha_star, &closed.alpha_star) < 1e-6);
    }
}

#[test]
fn response_slope_identity_holds_at_the_motivating_nae() {
    let g = LinearPriceMarket::motivating_example().spec();
    let s = NaeSettings::default();
    let r = solve_nae(&g, &s).unwrap();
    let terms = slope_identity_residuals(&g, &r.alpha_star, &r.x_star, &s).unwrap();
    for t in terms {
        assert!(t.relative < 1e-6, "{t:?}");
    }
}

#[test]
fn team_production_overinvests() {
    let t = TeamProductionSpec::new(2, 10.0, 0.3).unwrap();
    let r = team_production_nae(&t, &NaeSettings::default()).unwrap();
    let want = 1.0 / (1.0 - 0.3);
    assert!(rel_gap(&r.alpha_star, &[want, want]) < 1e-6);
    assert!(r.warnings.iter().all(|w| !w.contains("expected alpha > 1")));
}

#[test]
fn circle_game_fails_a6() {
    let g = CircleGame::standard().spec();
    let a = audit_assumptions(&g, &BiasFunction::default(), &SamplingPlan::default()).unwrap();
    assert_eq!(a.status(Assumption::A6), AuditStatus::Fail);
    assert!(a.witnesses.iter().any(|w| w.assumption == Assumption::A6));
    let err = solve_nae(&g, &NaeSettings::default()).unwrap_err();
    assert!(matches!(err, Error::AuditFailed(_)));
}
