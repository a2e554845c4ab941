use proptest::prelude::*;
use tbp_core::asymptotics::{sensitivity_state, zsystem_residual_sample};
use tbp_core::audit::{run_test, test_bp_bounds};
use tbp_core::bootstrap::{bootstrap_sensitivity, BootstrapConfig, WeightLaw};
use tbp_core::estimators::solve_location;
use tbp_core::oracle::{brute_force_sensitivity, OracleConfig, OracleTarget};
use tbp_core::sensitivity::{location_bp, location_eta, EstimatorSpec};
use tbp_core::{Sample, Score, Score32, ScoreFamily, Side, TestData, TestKind, TestSpec};

fn huber() -> Score {
    ScoreFamily::huber(1.345)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() < tol * (1.0 + a.abs())
}

fn distinct(xs: Vec<f64>) -> Vec<f64> {
    // jitter by index so ties never occur
    xs.into_iter()
        .enumerate()
        .map(|(i, x)| x + 1e-6 * i as f64)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn location_eta_is_monotone_in_m(xs in proptest::collection::vec(-5.0f64..5.0, 4..40)) {
        let s = Sample::new(xs).unwrap();
        let sc = huber();
        let th = solve_location(&s, &sc).unwrap().theta_hat;
        for side in [Side::Plus, Side::Minus] {
            let mut prev = 0.0;
            for m in 0..=s.n() / 2 {
                let e = location_eta(s.sorted(), &sc, th, m, side);
                prop_assert!(e >= prev - 1e-12, "m={m} {e} < {prev}");
                prev = e;
            }
        }
    }

    #[test]
    fn breakdown_is_first_crossing_on_the_grid(
        xs in proptest::collection::vec(-5.0f64..5.0, 4..30),
        eta in 0.01f64..3.0,
    ) {
        let s = Sample::new(xs).unwrap();
        let sc = huber();
        let th = solve_location(&s, &sc).unwrap().theta_hat;
        let bp = location_bp(&s, &sc, th, eta, Side::Plus).unwrap();
        let first = (1..=s.n()).find(|&m| location_eta(s.sorted(), &sc, th, m, Side::Plus) >= eta);
        prop_assert_eq!(bp.m, first);
        if let Some(m) = bp.m {
            prop_assert!(m >= 1 && m <= s.n().div_ceil(2));
        }
    }

    #[test]
    fn shift_leaves_sensitivity_unchanged(
        xs in proptest::collection::vec(-5.0f64..5.0, 4..30),
        c in -10.0f64..10.0,
        m in 1usize..3,
    ) {
        let s = Sample::new(xs).unwrap();
        let t = s.shifted(c);
        let sc = huber();
        let a = solve_location(&s, &sc).unwrap().theta_hat;
        let b = solve_location(&t, &sc).unwrap().theta_hat;
        prop_assert!((b - a - c).abs() < 1e-8);
        let ea = location_eta(s.sorted(), &sc, a, m, Side::Plus);
        let eb = location_eta(t.sorted(), &sc, b, m, Side::Plus);
        prop_assert!(close(ea, eb, 1e-7), "{ea} vs {eb}");
    }

    #[test]
    fn f32_tracks_f64(xs in proptest::collection::vec(-3.0f64..3.0, 6..30), m in 1usize..3) {
        let s64 = Sample::new(xs.clone()).unwrap();
        let s32 = Sample::new(xs.iter().map(|&x| x as f32).collect()).unwrap();
        let sc64 = huber();
        let sc32: Score32 = sc64.cast();
        let t64 = solve_location(&s64, &sc64).unwrap().theta_hat;
        let t32 = solve_location(&s32, &sc32).unwrap().theta_hat;
        prop_assert!((t64 - t32 as f64).abs() < 1e-4);
        let e64 = location_eta(s64.sorted(), &sc64, t64, m, Side::Plus);
        let e32 = location_eta(s32.sorted(), &sc32, t32, m, Side::Plus);
        prop_assert!(close(e64, e32 as f64, 1e-3), "{e64} vs {e32}");
    }

    #[test]
    fn oracle_matches_location_formula(xs in proptest::collection::vec(-4.0f64..4.0, 3..7)) {
        let s = Sample::new(distinct(xs)).unwrap();
        let sc = huber();
        let th = solve_location(&s, &sc).unwrap().theta_hat;
        let target = OracleTarget::Estimator(EstimatorSpec::Location(sc.clone()));
        let cfg = OracleConfig::default();
        for m in 1..=s.n() / 2 {
            for side in [Side::Plus, Side::Minus] {
                let o = brute_force_sensitivity(&s, &target, m, side, &cfg).unwrap();
                let a = location_eta(s.sorted(), &sc, th, m, side);
                prop_assert!(close(o, a, 1e-8), "m={m} {side:?}: {o} vs {a}");
            }
        }
    }

    #[test]
    fn wald_bracket_is_ordered(xs in proptest::collection::vec(-2.0f64..4.0, 8..40)) {
        let s = Sample::new(xs).unwrap();
        let spec = TestSpec::new(TestKind::Wald, 0.05);
        if let Ok(a) = test_bp_bounds(&s, &huber(), &spec) {
            prop_assert!(a.bracket().is_valid());
            let out = run_test(&TestData::One(s.clone()), &huber(), &spec).unwrap();
            prop_assert_eq!(out.decision, a.decision());
        }
    }

    #[test]
    fn zsystem_vanishes_at_sensitivity_state(xs in proptest::collection::vec(-4.0f64..4.0, 10..60)) {
        let s = Sample::new(distinct(xs)).unwrap();
        let sc = huber();
        let m = s.n() / 5;
        prop_assume!(m >= 1);
        let st = sensitivity_state(&s, &sc, m, Side::Plus).unwrap();
        let r = zsystem_residual_sample(&s, &st, Side::Plus, &sc);
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        prop_assert!(norm < 1e-8 * s.n() as f64, "{r:?}");
    }
}

#[test]
fn bootstrap_is_deterministic_and_reduces_under_constant_weights() {
    let s = Sample::new(
        (0..60)
            .map(|i| ((i * 37) % 61) as f64 / 10.0 - 3.0)
            .collect(),
    )
    .unwrap();
    let sc = huber();
    let cfg = BootstrapConfig::new(40, 11);
    let a = bootstrap_sensitivity(&s, &sc, 6, Side::Plus, &cfg).unwrap();
    let b = bootstrap_sensitivity(&s, &sc, 6, Side::Plus, &cfg).unwrap();
    assert_eq!(a.draws, b.draws);
    let flat = BootstrapConfig {
        weight_law: WeightLaw::Constant,
        ..cfg
    };
    let c = bootstrap_sensitivity(&s, &sc, 6, Side::Plus, &flat).unwrap();
    for d in &c.draws {
        assert!((d - c.point).abs() < 1e-9, "{d} vs {}", c.point);
    }
}
