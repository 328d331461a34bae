use proptest::prelude::*;

use steercert::povm::alice_ideal;
use steercert::robustness::{
    critical_epsilon, diagonal_cell_closed_form, f_closed_form, f_exact, noisy_bob, noisy_state,
    sweep, w_closed_form_epsilon, w_per_element, w_simulated, ClosedForm, MAX_STATE_EPSILON,
};
use steercert::scenario::distribution_from;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_matches_epsilon_closed_form(eps in 0.0f64..MAX_STATE_EPSILON) {
        let w = w_simulated(eps, eps, 0.0).unwrap();
        prop_assert!((w - w_closed_form_epsilon(eps)).abs() < 1e-10);
        prop_assert!(w >= 3.0 * (1.0 - eps) - 1e-12);
        let d = distribution_from(&noisy_state(eps, 0.0).unwrap(), &alice_ideal(), &noisy_bob(eps).unwrap()).unwrap();
        for x in 0..3 {
            for a in 0..3 {
                prop_assert!((d.get(a, a, x, x) - diagonal_cell_closed_form(eps)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w_is_monotone_below_three_quarters(e1 in 0.0f64..0.6, e2 in 0.0f64..0.6) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(w_closed_form_epsilon(hi) <= w_closed_form_epsilon(lo) + 1e-15);
    }

    #[test]
    fn exact_form_matches_simulation(delta in -0.5f64..0.5, eps in 0.0f64..0.5) {
        let sim = 3.0 - w_simulated(eps, eps, delta).unwrap();
        prop_assert!((f_exact(delta, eps).unwrap() - sim).abs() < 1e-10);
    }

    /// The published expression is the exact one with `δ` rescaled by `√2`.
    #[test]
    fn published_form_is_rescaled_exact_form(delta in -0.3f64..0.3, eps in 0.0f64..0.5) {
        let a = f_closed_form(delta, eps).unwrap();
        let b = f_exact(std::f64::consts::SQRT_2 * delta, eps).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    /// Substituting the largest per-element noise never overstates `W`.
    #[test]
    fn max_noise_substitution_is_conservative(
        eps in proptest::array::uniform9(0.0f64..0.3),
        eps_s in 0.0f64..0.3,
    ) {
        let table = [[eps[0], eps[1], eps[2]], [eps[3], eps[4], eps[5]], [eps[6], eps[7], eps[8]]];
        let w = w_per_element(&table, eps_s, 0.0).unwrap();
        let e_max = eps.iter().copied().fold(eps_s, f64::max);
        prop_assert!(w_closed_form_epsilon(e_max) <= w + 1e-9);
        // p(a,a|x,x) = (1−2ε_s)ε_{a,x}/9 + 2ε_s/9
        let expect = 3.0 - eps.iter().map(|e| (1.0 - 2.0 * eps_s) * e / 9.0 + 2.0 * eps_s / 9.0).sum::<f64>();
        prop_assert!((w - expect).abs() < 1e-12);
    }
}

#[test]
fn crossing_points() {
    let e_ref = critical_epsilon(2.673).unwrap();
    assert!((w_closed_form_epsilon(e_ref) - 2.673).abs() < 1e-12);
    assert!((e_ref - 0.118335532106).abs() < 1e-9);
    let e_exact = critical_epsilon(2.798056723657).unwrap();
    assert!((e_exact - 0.070641212739).abs() < 1e-9);
}

#[test]
fn sweep_rows_cover_grid() {
    let rows = sweep(&[0.0, 0.1, 0.2], &[-0.1, 0.0, 0.1], ClosedForm::Exact).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows
        .windows(2)
        .all(|w| (w[0].delta, w[0].epsilon) < (w[1].delta, w[1].epsilon)));
    assert!(rows.iter().all(|r| r.discrepancy < 1e-10));
    let published = sweep(&[0.1], &[0.1], ClosedForm::Published).unwrap();
    assert!(published[0].discrepancy > 1e-4);
}
