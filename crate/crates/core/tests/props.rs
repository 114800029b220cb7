//! Property tests for the structural invariants: metric identities,
//! projection round trips, exact bump-sum oddness and interval containment.

use borsuk::embed::{BumpLayer, BumpSum};
use borsuk::geom::{
    antipodal_projected, chord_distance, geodesic_distance, stereo_inverse, stereo_project,
    ProjectedPoint, SpherePoint,
};
use borsuk::numeric::wilson;
use proptest::prelude::*;

fn arb_unit_vector(dim: usize) -> impl Strategy<Value = SpherePoint> {
    prop::collection::vec(-1.0f64..1.0, dim + 1)
        .prop_filter("nonzero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-6)
        .prop_map(|v| SpherePoint::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chord_geodesic_identity(u in arb_unit_vector(2), v in arb_unit_vector(2)) {
        let geo = geodesic_distance(&u, &v).unwrap();
        let chord = chord_distance(&u, &v).unwrap();
        prop_assert!((chord - 2.0 * (geo / 2.0).sin()).abs() <= 1e-12);
        prop_assert!(chord <= geo + 1e-12);
        prop_assert!(chord >= 2.0 / std::f64::consts::PI * geo - 1e-12);
    }

    #[test]
    fn projection_round_trip(u in arb_unit_vector(3)) {
        prop_assume!(1.0 - u.height() > 1e-6);
        let back = stereo_inverse(&stereo_project(&u).unwrap());
        prop_assert!(chord_distance(&u, &back).unwrap() < 1e-10);
    }

    #[test]
    fn plane_round_trip(coords in prop::collection::vec(-50.0f64..50.0, 2)) {
        let z = ProjectedPoint::new(coords);
        let round = stereo_project(&stereo_inverse(&z)).unwrap();
        prop_assert!(z.dist(&round) < 1e-9 * (1.0 + z.norm()));
    }

    #[test]
    fn antipodal_projection_consistency(u in arb_unit_vector(2)) {
        prop_assume!(1.0 - u.height() > 1e-3 && 1.0 + u.height() > 1e-3);
        let z = stereo_project(&u).unwrap();
        prop_assume!(z.norm() > 1e-3);
        let direct = stereo_project(&u.antipode()).unwrap();
        let formula = antipodal_projected(&z).unwrap();
        prop_assert!(direct.dist(&formula) < 1e-9 * (1.0 + direct.norm()));
        prop_assert!((formula.norm() * z.norm() - 1.0).abs() < 1e-9 * (1.0 + 1.0 / z.norm()));
    }

    #[test]
    fn wilson_contains_its_estimate(hits in 0u64..=500, extra in 1u64..500) {
        let trials = hits + extra;
        let w = wilson(hits, trials);
        prop_assert!(w.lo <= w.estimate && w.estimate <= w.hi);
        prop_assert!((0.0..=1.0).contains(&w.lo) && (0.0..=1.0).contains(&w.hi));
    }

    #[test]
    fn bump_sums_are_exactly_odd(
        pts in prop::collection::vec(prop::collection::vec(-1.5f64..1.5, 2), 1..6),
        signs in prop::collection::vec(prop::bool::ANY, 6),
        radius in 0.05f64..0.4,
        dir in arb_unit_vector(1),
    ) {
        let amplitude = 0.004;
        let n = pts.len();
        let layer = BumpLayer {
            amplitude,
            radius,
            points: pts,
            signs: signs.iter().take(n).map(|&s| if s { amplitude } else { -amplitude }).collect(),
        };
        let f = BumpSum { dim: 2, layers: vec![layer] };
        let u = dir.coords();
        let (fu, fmu) = f.eval_pair(u);
        prop_assert_eq!(fu, -fmu);
        let direct = f.eval(&[-u[0], -u[1]]);
        prop_assert!((direct + fu).abs() < 1e-12);
    }

    #[test]
    fn poissonize_monotone_coupling(n in 0.0f64..200.0, extra in 0.0f64..200.0, seed in 0u64..1000) {
        let mut a = borsuk::exec::trial_rng(seed, 0, 0);
        let mut b = borsuk::exec::trial_rng(seed, 0, 0);
        let small = borsuk::experiments::poissonize(n, &mut a);
        let large = borsuk::experiments::poissonize(n + extra, &mut b);
        prop_assert!(small <= large);
    }
}
