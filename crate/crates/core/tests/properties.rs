use std::f64::consts::{FRAC_PI_2, PI};

use ontolab::chain::{self, Chain};
use ontolab::coarse::{self, conditional_correlation};
use ontolab::entropy::{self, Atom, EntropySpec, OutcomeDistribution};
use ontolab::ontic::{self, belt_half_width, calibrate_belt, calibrate_cap, ModelKind, OnticModel, ResponseModel, Wing};
use ontolab::qm::{self, EntangledState, MeasurementDirection};
use ontolab::sphere::OnticPoint;
use proptest::prelude::*;

fn theta() -> impl Strategy<Value = f64> {
    0.0..=FRAC_PI_2
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..2.0 * PI
}

fn dir(x: f64) -> MeasurementDirection {
    MeasurementDirection::new(x)
}

proptest! {
    #[test]
    fn closed_forms_match_the_oracle(t in theta(), al in angle(), be in angle()) {
        let s = EntangledState::new(t).unwrap();
        let closed = qm::joint_stats(&s, &dir(al), &dir(be)).unwrap();
        let oracle = qm::density_matrix_oracle(&s, &dir(al), &dir(be));
        prop_assert!((closed.expectation_a - oracle.expectation_a).abs() < 1e-12);
        prop_assert!((closed.expectation_b - oracle.expectation_b).abs() < 1e-12);
        prop_assert!((closed.correlation - oracle.correlation).abs() < 1e-12);
    }

    #[test]
    fn quantum_predictions_are_symmetric_and_bounded(t in theta(), al in angle(), be in angle()) {
        let s = EntangledState::new(t).unwrap();
        let c = qm::correlation(&s, &dir(al), &dir(be));
        prop_assert!((c - qm::correlation(&s, &dir(be), &dir(al))).abs() < 1e-15);
        prop_assert!((qm::expectation_a(&s, &dir(al + PI)) + qm::expectation_a(&s, &dir(al))).abs() < 1e-12);
        prop_assert!((qm::correlation(&s, &dir(al + PI), &dir(be)) + c).abs() < 1e-12);
        let j = qm::joint_stats(&s, &dir(al), &dir(be)).unwrap();
        prop_assert!(c.abs() <= 1.0 + 1e-15);
        for p in [j.joint.plus_plus, j.joint.plus_minus, j.joint.minus_plus, j.joint.minus_minus] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn belt_width_law_is_exact(t in theta(), al in angle()) {
        let e = qm::expectation_a(&EntangledState::new(t).unwrap(), &dir(al));
        prop_assert!((belt_half_width(e).sin() - (1.0 - e.abs())).abs() < 1e-12);
    }

    #[test]
    fn responses_are_deterministic(t in theta(), al in angle(), be in angle(), mu in angle(), tau in 0.0..=PI) {
        let s = EntangledState::new(t).unwrap();
        let m = calibrate_cap(&s, &dir(al), &dir(be), 1e-9).unwrap();
        let p = OnticPoint::new(mu, tau);
        prop_assert_eq!(m.respond(&p), m.respond(&p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn marginals_are_exact_for_any_b(t in theta(), al in angle(), be in angle(), kind in prop::bool::ANY) {
        let s = EntangledState::new(t).unwrap();
        let kind = if kind { ModelKind::Cap } else { ModelKind::Belt };
        let target = 0.5 * (1.0 + qm::expectation_a(&s, &dir(al)));
        for b in [be, be + 1.0, be + 2.5] {
            let m = OnticModel::calibrate(kind, &s, &dir(al), &dir(b), 1e-9).unwrap();
            prop_assert!((ontic::model_stats(&m).plus_a - target).abs() < 1e-9);
        }
    }

    #[test]
    fn recalibration_is_idempotent(t in theta(), al in angle(), be in angle()) {
        let s = EntangledState::new(t).unwrap();
        let cap = calibrate_cap(&s, &dir(al), &dir(be), 1e-9).unwrap();
        let again = cap.recalibrate().unwrap();
        prop_assert!((cap.xi - again.xi).abs() < 1e-12);
        prop_assert!((cap.separation() - again.separation()).abs() < 1e-12);
        let belt = calibrate_belt(&s, &dir(al), &dir(be), 1e-9).unwrap();
        prop_assert!((belt.separation() - belt.recalibrate().unwrap().separation()).abs() < 1e-12);
    }

    #[test]
    fn profiles_average_to_the_marginal_and_obey_the_pointwise_bound(
        t in theta(), al in angle(), be in angle(), kind in prop::bool::ANY,
    ) {
        let s = EntangledState::new(t).unwrap();
        let kind = if kind { ModelKind::Cap } else { ModelKind::Belt };
        let m = OnticModel::calibrate(kind, &s, &dir(al), &dir(be), 1e-9).unwrap();
        let f = coarse::coarse_grain(&m, Wing::A, 64).unwrap();
        let g = coarse::coarse_grain(&m, Wing::B, 64).unwrap();
        prop_assert!((f.mean() - qm::expectation_a(&s, &dir(al))).abs() < 1e-8);
        prop_assert!(f.f_values.iter().all(|v| (-1.0..=1.0).contains(v)));
        for (&tau, &fv) in f.tau_grid.iter().zip(&f.f_values) {
            let gv = coarse::profile_value(&m, Wing::B, tau);
            prop_assert!((fv - gv).abs() <= 1.0 - conditional_correlation(&m, tau) + 1e-9);
        }
        let report = coarse::variance_delta(&f, qm::expectation_a(&s, &dir(al)));
        prop_assert!(report.delta >= 0.0 && report.delta <= report.bound1 + 1e-9);
        prop_assert!((g.mean() - qm::expectation_b(&s, &dir(be))).abs() < 1e-8);
    }

    #[test]
    fn omega_of_any_chain_bounds_the_belt_variance(t in theta(), al in angle(), n in 1usize..6, seed in 0u64..1000) {
        use rand::Rng;
        let s = EntangledState::new(t).unwrap();
        let a = dir(al);
        let mut rng = ontolab::rng::stream(seed, 0);
        let mut interior: Vec<f64> = (0..2 * n - 1).map(|_| al + rng.gen_range(0.0..PI)).collect();
        interior.sort_by(f64::total_cmp);
        let chain = Chain::from_interior(&a, &interior).unwrap();
        let ea = qm::expectation_a(&s, &a);
        let m = calibrate_belt(&s, &a, &a, 1e-9).unwrap();
        let delta = coarse::variance_delta(&coarse::coarse_grain(&m, Wing::A, 64).unwrap(), ea).delta;
        let omega = chain::omega(&s, &a, &chain).unwrap();
        prop_assert!(delta <= omega - ea * ea + 1e-8);
    }
}

fn distribution() -> impl Strategy<Value = OutcomeDistribution> {
    prop::collection::vec((1e-3f64..1.0, 0.0f64..=1.0), 1..6).prop_map(|raw| {
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        OutcomeDistribution::new(raw.into_iter().map(|(w, p)| Atom { weight: w / total, p }).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn averaged_entropy_is_below_entropy_of_the_mean(d in distribution(), alpha in 0.0f64..=1.0) {
        let spec = EntropySpec::new(alpha).unwrap();
        prop_assert!(entropy::average_entropy(&d, &spec) <= entropy::renyi_entropy(d.mean(), &spec) + 1e-9);
    }

    #[test]
    fn renyi_entropy_is_symmetric_and_bounded(p in 0.0f64..=1.0, alpha in 0.0f64..5.0) {
        let spec = EntropySpec::new(alpha).unwrap();
        let h = entropy::renyi_entropy(p, &spec);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&h));
        prop_assert!((h - entropy::renyi_entropy(1.0 - p, &spec)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lp_minimizers_match_the_moments(p in 0.02f64..0.98, frac in 0.0f64..=1.0, alpha in prop::sample::select(vec![0.25, 0.5, 1.0, 2.0])) {
        let delta = frac * entropy::max_variance(p);
        let spec = EntropySpec::new(alpha).unwrap();
        let r = entropy::minimize_average_entropy(p, delta, &spec, entropy::MIN_LP_GRID).unwrap();
        prop_assert!(r.minimizer.atoms.len() <= 3);
        prop_assert!((r.minimizer.mean() - p).abs() < 1e-9);
        prop_assert!((r.minimizer.variance() - delta).abs() < 1e-9);
        prop_assert!(r.h_bar <= entropy::renyi_entropy(p, &spec) + 1e-9);
    }
}
