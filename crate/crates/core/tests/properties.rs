mod common;

use std::sync::OnceLock;

use lingp::approx::{garrote_objective, garrote_solve, kkt_residual};
use lingp::basis::{legendre_orthonormal, orthonormal_scale};
use lingp::control::{check_contraction, run_control, ControlConfig};
use lingp::polyopt::{compose_cost, minimize, minimize_multivariate, minimize_univariate, sos_largest_q};
use lingp::{Execution, SurrogateModel};
use proptest::prelude::*;

fn bivariate_example() -> &'static SurrogateModel {
    static MODEL: OnceLock<SurrogateModel> = OnceLock::new();
    MODEL.get_or_init(common::fitted_bivariate)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn garrote_matches_enumeration(seed in 0u64..10_000) {
        let case = common::garrote_case(seed);
        let c = garrote_solve(&case.design, &case.y, &case.omega, case.m).unwrap();
        prop_assert!(c.iter().all(|&v| v >= 0.0));
        prop_assert!(c.sum() <= case.m * (1.0 + 1e-12) + 1e-12);
        prop_assert!(kkt_residual(&case.design, &case.y, &case.omega, case.m, &c) <= 1e-8);
        let f = garrote_objective(&case.design, &case.y, &case.omega, &c);
        let (best, _) = common::exhaustive_garrote(&case);
        prop_assert!((f - best).abs() <= 1e-6, "solver {f}, enumeration {best}");
    }

    #[test]
    fn garrote_objective_falls_with_budget(seed in 0u64..10_000) {
        let case = common::garrote_case(seed);
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let m = case.omega.len() as f64 * i as f64 / 10.0;
            let c = garrote_solve(&case.design, &case.y, &case.omega, m).unwrap();
            let f = garrote_objective(&case.design, &case.y, &case.omega, &c);
            prop_assert!(f <= prev + 1e-9 * prev.max(1.0));
            prev = f;
        }
    }

    #[test]
    fn univariate_minimum_beats_fine_grid(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let model = common::random_univariate_model(&mut r, 8);
        let cost = common::random_cost(&mut r, &model);
        let m = minimize_univariate(&cost).unwrap();
        prop_assert!((-1.0..=1.0).contains(&m.x[0]));
        // evaluation rounding grows with the coefficients, not the value
        let rounding = 1e-13 * cost.polynomial().univariate_coeffs().iter().map(|c| c.abs()).sum::<f64>();
        prop_assert!((m.value - cost.eval(&m.x)).abs() <= rounding);
        let grid = common::grid_min_univariate(&cost, 1_000_000);
        prop_assert!(m.value <= grid + rounding.max(1e-9 * grid.abs().max(1.0)), "min {} grid {grid}", m.value);
        prop_assert!(grid - m.value <= 1e-6 * grid.abs().max(1.0));
    }

    #[test]
    fn largest_lower_bound_is_the_minimum(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let model = common::random_univariate_model(&mut r, 8);
        let cost = common::random_cost(&mut r, &model);
        let q = sos_largest_q(&cost, 1e-10).unwrap();
        let m = minimize_univariate(&cost).unwrap();
        prop_assert!((q - m.value).abs() <= 1e-6, "q {q} min {}", m.value);
    }

    #[test]
    fn costs_are_nonnegative_and_gradients_match_differences(seed in 0u64..10_000, bivariate in any::<bool>()) {
        let mut r = common::rng(seed);
        let model = if bivariate {
            common::random_bivariate_model(&mut r, 4)
        } else {
            common::random_univariate_model(&mut r, 8)
        };
        let cost = common::random_cost(&mut r, &model);
        for k in 0..50 {
            let t = -0.99 + 1.98 * k as f64 / 49.0;
            let x: Vec<f64> = (0..model.dim()).map(|i| if i == 0 { t } else { -t * 0.7 }).collect();
            prop_assert!(cost.eval(&x) >= -1e-12);
            let g = cost.gradient(&x);
            for (a, b) in g.iter().zip(common::fd_gradient(&cost, &x, 1e-6)) {
                prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn control_example_cost_matches_grid(y_star in 0.05f64..0.95, x1 in -1.0f64..1.0, x2 in -1.0f64..1.0, w2 in 0.0f64..2.0) {
        let model = bivariate_example();
        let cost = compose_cost(model, y_star, &[x1, x2], 1.0, w2).unwrap();
        let m = minimize(&cost, Execution::Sequential).unwrap();
        prop_assert!(cost.domain().contains(&m.x, 0.0));
        let grid = common::grid_min_bivariate(&cost, 500);
        prop_assert!(m.value <= grid + 1e-4, "min {} grid {grid}", m.value);
    }

    #[test]
    fn multistart_descends_from_the_previous_input(seed in 0u64..10_000) {
        // Random costs can hide their global minimum from the start grid, so
        // only local guarantees are checked here.
        let mut r = common::rng(seed);
        let model = common::random_bivariate_model(&mut r, 3);
        let cost = common::random_cost(&mut r, &model);
        let m = minimize(&cost, Execution::Sequential).unwrap();
        prop_assert!(cost.domain().contains(&m.x, 0.0));
        let start = cost.eval(cost.x_prev());
        prop_assert!(m.value <= start + 1e-12);
        prop_assert!(m.certified);
        let tol = 1e-6 * (1.0 + start);
        prop_assert!(cost.gradient(&m.x).iter().zip(&m.x).all(|(g, x)| g.abs() <= tol || x.abs() == 1.0));
        let par = minimize_multivariate(&cost, 3, Execution::Parallel).unwrap();
        prop_assert_eq!(par, m);
    }

    #[test]
    fn control_steps_contract(seed in 0u64..10_000, y_star in -0.5f64..1.2, x0 in -1.0f64..1.0, w2 in 0.1f64..3.0) {
        let mut r = common::rng(seed);
        let model: SurrogateModel = common::random_univariate_model(&mut r, 5);
        let cfg = ControlConfig { w2, max_steps: 60, ..ControlConfig::new(y_star, vec![x0]) };
        let trace = run_control(&model, None, &cfg).unwrap();
        prop_assert!(trace.steps.iter().all(|s| (-1.0..=1.0).contains(&s.x[0])));
        let report = check_contraction(&trace, cfg.w1, cfg.w2);
        prop_assert_eq!(report.violations, 0);
        prop_assert!(report.monotone_gap);
    }
}

#[test]
fn orthonormal_legendre_by_quadrature() {
    // Gauss-Legendre would reuse the recurrence under test; a fine midpoint
    // rule is independent of it.
    let n = 100_000;
    let h = 2.0 / n as f64;
    for a in 0..8 {
        for b in a..8 {
            let s: f64 = (0..n)
                .map(|i| {
                    let z = -1.0 + (i as f64 + 0.5) * h;
                    legendre_orthonormal(a, z) * legendre_orthonormal(b, z) * h
                })
                .sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-6, "<{a},{b}> = {s}");
        }
    }
    assert!((orthonormal_scale(2) - 2.5f64.sqrt()).abs() < 1e-15);
}
