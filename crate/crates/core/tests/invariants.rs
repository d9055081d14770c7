use std::f64::consts::PI;

use proptest::prelude::*;

use udw::correlators::{pair_interval, wightman, Regulator};
use udw::kinematics::{four_velocity, minkowski_interval, worldline_event, TrajectoryScenario};
use udw::response_closed::{
    p_antiparallel_formula, p_differing_formula, p_local_formula, p_parallel_formula,
    DetectorParams,
};
use udw::response_numeric::{epsilon_extrapolate, planck_rate, Extrapolation};

fn scenario() -> impl Strategy<Value = TrajectoryScenario> {
    prop_oneof![
        (0.2f64..3.0).prop_map(TrajectoryScenario::single),
        (0.2f64..3.0, 0.0f64..3.0).prop_map(|(k, l)| TrajectoryScenario::parallel(k, l)),
        (0.2f64..3.0, -3.0f64..3.0).prop_map(|(k, l)| TrajectoryScenario::antiparallel(k, l)),
        (0.2f64..3.0, 0.2f64..3.0).prop_map(|(a, b)| TrajectoryScenario::differing(a, b)),
        (0.2f64..3.0, 0.1f64..3.0).prop_map(|(k, l)| TrajectoryScenario::thermal_pair(k, l)),
    ]
}

fn params() -> impl Strategy<Value = DetectorParams> {
    (0.5f64..20.0, 0.02f64..0.2).prop_map(|(om, sg)| DetectorParams::new(om, 0.01, sg).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn correlator_hermiticity(sc in scenario(), i in 1usize..=2, j in 1usize..=2, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let n = sc.branch_count();
        let (i, j) = (i.min(n), j.min(n));
        let reg = Regulator::new(1e-3).unwrap();
        let a = wightman(&sc, i, j, t1, t2, reg).unwrap();
        let b = wightman(&sc, j, i, t2, t1, reg).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn four_velocity_is_unit_timelike(sc in scenario(), i in 1usize..=2, tau in -6.0f64..6.0) {
        let u = four_velocity(&sc, i.min(sc.branch_count()), tau).unwrap();
        prop_assert!((u.minkowski_norm() + 1.0).abs() <= 1e-12 * u.0[0] * u.0[0]);
        prop_assert!(u.0[0] >= 1.0);
    }

    #[test]
    fn factorised_interval_matches_events(sc in scenario(), i in 1usize..=2, j in 1usize..=2, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let n = sc.branch_count();
        let (i, j) = (i.min(n), j.min(n));
        let direct = minkowski_interval(&worldline_event(&sc, i, t1).unwrap(), &worldline_event(&sc, j, t2).unwrap());
        let factored = pair_interval(&sc, i, j, t1, t2);
        let scale = 1.0 + (t1.abs() + t2.abs()).exp() / sc.kappa_min().powi(2);
        prop_assert!((direct - factored).abs() <= 1e-10 * scale, "{direct} vs {factored}");
    }

    #[test]
    fn closed_forms_are_nonnegative(p in params(), k in 0.2f64..3.0, l in 0.0f64..5.0) {
        prop_assume!(k * p.sigma * p.sigma * p.omega < 1.0);
        prop_assert!(p_local_formula(&p, k) > 0.0);
        prop_assert!(p_parallel_formula(&p, k, l) > 0.0);
        prop_assert!(p_parallel_formula(&p, k, l) <= p_local_formula(&p, k) * (1.0 + 1e-12));
    }

    #[test]
    fn closed_form_reductions(p in params(), k in 0.2f64..3.0) {
        prop_assume!(k * p.sigma * p.sigma * p.omega < 1.0);
        let loc = p_local_formula(&p, k);
        prop_assert!((p_parallel_formula(&p, k, 0.0) / loc - 1.0).abs() < 1e-12);
        prop_assert!((p_differing_formula(&p, k, k) / loc - 1.0).abs() < 1e-9);
        prop_assert!((p_antiparallel_formula(&p, k, 1e12) / (loc / 2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detailed_balance_of_planck(k in 0.1f64..5.0, om in 0.01f64..5.0) {
        let ratio = planck_rate(k, om) / planck_rate(k, -om);
        prop_assert!((ratio / (-2.0 * PI * om / k).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_recovers_linear_data(a in -5.0f64..5.0, b in -50.0f64..50.0) {
        let pts: Vec<(f64, f64)> = [1e-2, 5e-3, 2.5e-3].iter().map(|&e| (e, a + b * e)).collect();
        let r = epsilon_extrapolate(&pts, Extrapolation::RichardsonLinear).unwrap();
        prop_assert!((r.limit - a).abs() < 1e-12 * (1.0 + a.abs() + b.abs()));
    }
}
