use naeq_core::*;
use proptest::prelude::*;

/// Direct-form duopoly `q_i = a_i - bt_i x_i + ct_i x_j` with profit
/// `x_i q_i`: the perceived FOCs are linear,
/// `(1 + alpha_i) bt_i x_i - ct_i x_j = a_i`.
fn linear_oracle(a: [f64; 2], bt: [f64; 2], ct: [f64; 2], alpha: [f64; 2]) -> [f64; 2] {
    let m = [[(1.0 + alpha[0]) * bt[0], -ct[0]], [-ct[1], (1.0 + alpha[1]) * bt[1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (a[0] * m[1][1] - m[0][1] * a[1]) / det,
        (m[0][0] * a[1] - a[0] * m[1][0]) / det,
    ]
}

fn market() -> impl Strategy<Value = ([f64; 2], [f64; 2], [f64; 2])> {
    (
        [5.0..40.0f64, 5.0..40.0],
        [0.5..2.0f64, 0.5..2.0],
        [-0.4..0.9f64, -0.4..0.9],
    )
        .prop_map(|(a, bt, k)| (a, bt, [k[0] * bt[0], k[1] * bt[1]]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generic_solve_matches_linear_system(
        (a, bt, ct) in market(),
        alpha in [0.3..1.5f64, 0.3..1.5],
    ) {
        let Ok(m) = LinearPriceMarket::duopoly_direct(a, bt, ct) else { return Ok(()) };
        let want = linear_oracle(a, bt, ct, alpha);
        prop_assume!(want.iter().all(|&x| x > 0.0));
        let g = m.spec();
        let bias = BiasProfile::new(alpha.to_vec()).unwrap();
        let r = solve_alpha_equilibrium(&g, &bias, &SolverSettings::default()).unwrap();
        for i in 0..2 {
            prop_assert!((r.x[i] - want[i]).abs() <= 1e-8 * want[i].max(1.0), "{:?} vs {want:?}", r.x);
            let foc = perceived_marginal_profit(&g, &bias, &r.x, i).unwrap();
            prop_assert!(foc.abs() <= 1e-8, "FOC residual {foc}");
            prop_assert!(r.soc[i] < 0.0);
        }
        let closed = price_alpha_equilibrium(&m, &bias).unwrap();
        prop_assert!((closed[0] - want[0]).abs() <= 1e-9 * want[0].max(1.0));
    }

    #[test]
    fn negated_strategies_give_negated_equilibria(
        (a, bt, ct) in market(),
        alpha in [0.4..1.4f64, 0.4..1.4],
    ) {
        let Ok(m) = LinearPriceMarket::duopoly_direct(a, bt, ct) else { return Ok(()) };
        prop_assume!(linear_oracle(a, bt, ct, alpha).iter().all(|&x| x > 0.0));
        let g = m.spec();
        let neg = negate_relabel(&g);
        let bias = BiasProfile::new(alpha.to_vec()).unwrap();
        let s = SolverSettings::default();
        let x = solve_alpha_equilibrium(&g, &bias, &s).unwrap().x;
        let y = solve_alpha_equilibrium(&neg, &bias, &s).unwrap().x;
        for i in 0..2 {
            prop_assert!((x[i] + y[i]).abs() <= 1e-7 * x[i].abs().max(1.0), "{x:?} vs {y:?}");
        }
        prop_assert_eq!(neg.payoffs(&y), g.payoffs(&y.iter().map(|v| -v).collect::<Vec<_>>()));
    }
}

#[test]
fn unbiased_profile_is_nash() {
    let m = LinearPriceMarket::motivating_example();
    let g = m.spec();
    let r = solve_alpha_equilibrium(&g, &BiasProfile::unbiased(2), &SolverSettings::default()).unwrap();
    // 20 - 2x + 0.8x = 0 at the symmetric Nash price.
    for &x in r.x.iter() {
        assert!((x - 20.0 / 1.2).abs() < 1e-9);
    }
    for i in 0..2 {
        let br = perceived_best_reply(&g, 1.0, &[r.x[1 - i]], i).unwrap();
        assert!((br - r.x[i]).abs() < 1e-8);
    }
}

#[test]
fn bias_out_of_domain_is_rejected() {
    let g = LinearPriceMarket::motivating_example().spec();
    let bad = BiasProfile::new(vec![0.0, 1.0]);
    let err = bad.and_then(|b| solve_alpha_equilibrium(&g, &b, &SolverSettings::default()));
    assert!(err.is_err());
}
