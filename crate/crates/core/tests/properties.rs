use ccflow_core::coefficients::{cutoff_chi, dist_core, CapacityParams};
use ccflow_core::geometry::{builtin_chart, BuiltinCurve};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cutoff_in_unit_interval(delta in 1e-6f64..1.0, r in 0.0f64..2.0) {
        let z = cutoff_chi(delta, r);
        prop_assert!((0.0..=1.0).contains(&z));
        prop_assert_eq!(z == 0.0, r >= delta);
    }

    #[test]
    fn distance_is_one_lipschitz(
        s in -0.5f64..1.5, nu in -0.2f64..0.2, om in -0.2f64..0.2,
        ds in -0.05f64..0.05, dn in -0.05f64..0.05, dw in -0.05f64..0.05,
    ) {
        let p = CapacityParams::new(0.2, 0.05, 0.01).unwrap();
        let a = dist_core(&p, s, nu, om);
        let b = dist_core(&p, s + ds, nu + dn, om + dw);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= (ds * ds + dn * dn + dw * dw).sqrt() + 1e-15);
    }

    #[test]
    fn chart_inverts_its_map(s in 0.05f64..0.95, r in 0.0f64..0.15, phi in 0.0f64..6.28, t in 0.0f64..1.0) {
        let chart = builtin_chart(BuiltinCurve::by_name("arc").unwrap(), 0.2, (0.0, 1.0)).unwrap();
        let (lo, hi) = chart.s_range();
        let s = lo + s * (hi - lo);
        let (nu, om) = (r * phi.cos(), r * phi.sin());
        let x = chart.map(t, s, nu, om).unwrap();
        let c = chart.invert_chart(t, &x).unwrap().expect("inside the tube");
        prop_assert!((c.s - s).abs() < 1e-8 && (c.nu - nu).abs() < 1e-8 && (c.omega - om).abs() < 1e-8);
        prop_assert!(chart.det_jf(t, s, nu, om).unwrap() > 0.0);
    }
}
