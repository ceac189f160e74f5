use finsler_core::inequalities::extremal::sobolev_extremal;
use finsler_core::inequalities::{evaluate_case, map_for, sharp_constants, CaseProfile, Family};
use finsler_core::norms::{identity_residuals, NormSpec};
use finsler_core::quadrature::mc_wulff_integral;
use finsler_core::report::Tolerances;
use finsler_core::specfun::log_gamma;
use finsler_core::transplant::{MapKind, TransplantMap};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3).prop_filter("away from the origin", |v| v.iter().map(|t| t * t).sum::<f64>() > 1e-2)
}

fn weighted() -> impl Strategy<Value = NormSpec> {
    (1.2f64..6.0, prop::collection::vec(0.3f64..3.0, 3)).prop_map(|(q, w)| NormSpec::weighted_lq(q, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_identities_hold_for_weighted_norms(spec in weighted(), xi in vec3(), x in vec3()) {
        let r = identity_residuals(&spec, &xi, &x).unwrap();
        prop_assert!(r.max() < 1e-9, "{r:?}");
    }

    #[test]
    fn norms_are_even_and_homogeneous(spec in weighted(), x in vec3(), t in -5.0f64..5.0) {
        prop_assume!(t.abs() > 1e-3);
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let (h, h0) = (spec.eval(&x).unwrap(), spec.dual(&x).unwrap());
        prop_assert!((spec.eval(&tx).unwrap() - t.abs() * h).abs() <= 1e-13 * t.abs() * h);
        prop_assert!((spec.dual(&tx).unwrap() - t.abs() * h0).abs() <= 1e-12 * t.abs() * h0);
        prop_assert!(x.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= h * h0 * (1.0 + 1e-12));
    }

    #[test]
    fn log_gamma_matches_statrs(x in 0.05f64..60.0) {
        let want = statrs::function::gamma::ln_gamma(x);
        prop_assert!((log_gamma(x).unwrap() - want).abs() <= 1e-13 * want.abs().max(1.0));
    }

    #[test]
    fn maps_are_increasing(n in 3usize..6, p in 1.2f64..2.9, r1 in 1e-3f64..50.0, dr in 1e-6f64..10.0) {
        let m = TransplantMap::new(MapKind::Interior, n, p, 1.0).unwrap();
        let (a, b) = (m.forward_coord(r1), m.forward_coord(r1 + dr));
        prop_assert!(a.x <= b.x && a.gap > b.gap && b.gap > 0.0, "{a:?} {b:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sobolev_equality_for_every_extremal(a in 0.2f64..5.0, b in 0.2f64..5.0, p in 1.5f64..2.95) {
        let spec = NormSpec::weighted_lq(4.0, vec![1.0, 2.0, 0.5]).unwrap();
        let map = map_for(Family::Sobolev, 3, p, 1.0).unwrap();
        let k = sharp_constants(Family::Sobolev, 3, p, &spec, 1.0).unwrap();
        let u = CaseProfile::Radial(sobolev_extremal(&map, a, b).unwrap());
        let rep = evaluate_case(Family::Sobolev, &spec, &map, &u, &k, true, &Tolerances::default()).unwrap();
        prop_assert!(rep.pass && rep.relative_deficit < 1e-8, "{rep:?}");
    }
}

#[test]
fn monte_carlo_is_reproducible_by_seed() {
    let spec = NormSpec::weighted_lq(4.0, vec![1.0, 2.0, 0.5]).unwrap();
    let g = |x: &[f64]| x[0] * x[0] + x[2].abs();
    let a = mc_wulff_integral(&spec, 1.0, g, 100_000, 11).unwrap();
    let b = mc_wulff_integral(&spec, 1.0, g, 100_000, 11).unwrap();
    let c = mc_wulff_integral(&spec, 1.0, g, 100_000, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.estimate, c.estimate);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| mc_wulff_integral(&spec, 1.0, g, 100_000, 11).unwrap());
    assert_eq!(a, serial);
}
