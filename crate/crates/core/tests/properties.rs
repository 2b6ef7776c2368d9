use num_rational::Ratio;
use num_traits::Signed;
use proptest::prelude::*;

use fluxgauge_core::bounds::{check_measure_lemma, verdict, DiscreteInstance, FluxSetup, QuadOptions, Verdict};
use fluxgauge_core::dynamics::{masked_displacement, Trajectory};
use fluxgauge_core::geometry::{ball, ParametricCurve};
use fluxgauge_core::runner::{ExperimentConfig, FieldSpec, OdeSpec, Scenario, ShapeSpec};
use fluxgauge_core::{Vec2, Vec3};

fn cor3_sides<const D: usize>(
    d1: &fluxgauge_core::geometry::ImplicitDomain<f64, D>,
    d2: &fluxgauge_core::geometry::ImplicitDomain<f64, D>,
    h: f64,
) -> (f64, f64) {
    let r = FluxSetup::new("scale", d1, d2, QuadOptions::new(h)).unwrap().cor3();
    (r.lhs, r.rhs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cor3_scales_with_boundary_measure_2d(
        cx in -0.5f64..0.5, cy in -0.5f64..0.5, r1 in 0.4f64..0.9,
        ex in -0.3f64..0.3, r2 in 0.5f64..1.0,
        lambda in prop::sample::select(vec![0.5f64, 2.0]),
    ) {
        let d1 = ball(Vec2::new2(cx, cy), r1).unwrap();
        let d2 = ball(Vec2::new2(ex, 0.1), r2).unwrap();
        let h = 1.0 / 128.0;
        let (l1, r1s) = cor3_sides(&d1, &d2, h);
        let (l2, r2s) = cor3_sides(&d1.scaled(lambda), &d2.scaled(lambda), h * lambda);
        prop_assert!((l2 - lambda * l1).abs() <= 1e-6 * (1.0 + l2.abs()), "{l2} vs {}", lambda * l1);
        prop_assert!((r2s - lambda * r1s).abs() <= 1e-6 * (1.0 + r2s.abs()));
    }

    #[test]
    fn cor3_scales_with_boundary_measure_3d(
        cz in -0.4f64..0.4, r1 in 0.5f64..0.8,
        lambda in prop::sample::select(vec![0.5f64, 2.0]),
    ) {
        let d1 = ball(Vec3::from_fn(|i| if i == 2 { cz } else { 0.05 }), r1).unwrap();
        let d2 = ball(Vec3::zero(), 0.7).unwrap();
        let h = 1.0 / 16.0;
        let (l1, r1s) = cor3_sides(&d1, &d2, h);
        let (l2, r2s) = cor3_sides(&d1.scaled(lambda), &d2.scaled(lambda), h * lambda);
        let s = lambda * lambda;
        prop_assert!((l2 - s * l1).abs() <= 1e-6 * (1.0 + l2.abs()), "{l2} vs {}", s * l1);
        prop_assert!((r2s - s * r1s).abs() <= 1e-6 * (1.0 + r2s.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_negates_masked_displacement(
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, rc in 0.3f64..1.5,
        dx in -1.5f64..1.5, dy in -1.5f64..1.5, rd in 0.1f64..1.5,
        knots in 16usize..200,
    ) {
        let curve = ParametricCurve::circle(Vec2::new2(cx, cy), rc).unwrap();
        let path = Trajectory::from_parametric(&curve, knots).unwrap();
        let disk = ball(Vec2::new2(dx, dy), rd).unwrap();
        let forward = masked_displacement(&path, &disk).unwrap();
        let backward = masked_displacement(&path.reversed(), &disk).unwrap();
        prop_assert_eq!(backward, -forward);
    }

    #[test]
    fn measure_lemma_holds_exactly(
        points in prop::collection::vec(
            (0i64..=20, 1i64..=9, -20i64..=20, 1i64..=9, any::<bool>(), any::<bool>()),
            1..30,
        ),
    ) {
        let inst = DiscreteInstance {
            weights: points.iter().map(|p| Ratio::new(p.0, p.1)).collect(),
            values: points.iter().map(|p| Ratio::new(p.2, p.3)).collect(),
            u: points.iter().map(|p| p.4).collect(),
            v: points.iter().map(|p| p.5).collect(),
        };
        let out = check_measure_lemma(&inst);
        prop_assert!(out.difference_lhs <= out.rhs);
        prop_assert!(out.intersection_lhs <= out.rhs);
        prop_assert!(out.difference_lhs + out.intersection_lhs >= out.integral_u.abs());
    }

    #[test]
    fn verdict_rule_is_consistent(
        lhs in -1e3f64..1e3, rhs in -1e3f64..1e3, err in 0.0f64..10.0, extra in 0.0f64..10.0,
    ) {
        let tol = 3.0 * err + extra;
        let v = verdict(lhs, rhs, tol, err);
        if lhs <= rhs {
            prop_assert_eq!(v, Verdict::Holds);
        }
        match v {
            Verdict::Holds => prop_assert!(lhs <= rhs + tol),
            Verdict::Violated => prop_assert!(lhs > rhs + 3.0 * err && lhs > rhs + tol),
            Verdict::Inconclusive => prop_assert!(lhs > rhs + tol && lhs <= rhs + 3.0 * err),
        }
        prop_assert_eq!(verdict(f64::NAN, rhs, tol, err), Verdict::Inconclusive);
    }

    #[test]
    fn config_round_trips(
        scenario in prop::sample::select(Scenario::ALL.to_vec()),
        seed in any::<u64>(),
        resolution in prop::option::of(1e-4f64..0.5),
        teeth in prop::option::of(prop::collection::vec(3usize..40, 1..4)),
        params in prop::collection::vec(-2.0f64..2.0, 0..6),
        ode in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::new(scenario);
        cfg.seed = seed;
        cfg.resolution = resolution;
        cfg.comb_teeth = teeth;
        cfg.d1 = Some(ShapeSpec { shape: "ball".into(), params: params.clone(), region: None });
        cfg.d2 = Some(ShapeSpec { shape: "halfspace".into(), params, region: Some(2.0) });
        cfg.field = Some(FieldSpec { kind: "rotation".into(), params: vec![1.5] });
        if ode {
            cfg.ode = Some(OdeSpec::default());
        }
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}
