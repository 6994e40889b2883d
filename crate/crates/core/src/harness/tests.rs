use super::*;
use crate::coefficients::{CapacityParams, DeltaRule};
use crate::geometry::{builtin_chart, BuiltinCurve, CurveSource, Vec3};
use crate::mesh::{Grid3D, QuadDensity};

#[test]
fn segment_geometry_suite_passes() {
    let c = CurveSource::Builtin(BuiltinCurve::by_name("segment").unwrap());
    let rep = run_geometry_suite_for(&c, 0.1, (0.0, 1.0), 50, 3).unwrap();
    assert!(rep.passed(), "{}", rep.to_text());
    assert!(rep.verdict("J_F positive").unwrap().passed);
}

#[test]
fn arc_beyond_reach_reports_witness() {
    let c = CurveSource::Builtin(BuiltinCurve::Arc {
        center: [0.5; 3],
        radius: 0.05,
        angular_velocity: 0.0,
    });
    let rep = run_geometry_suite_for(&c, 0.1, (0.0, 1.0), 50, 3).unwrap();
    assert!(!rep.passed());
    let v = rep.verdict("J_F positive").unwrap();
    assert!(!v.passed && v.hard);
    assert_eq!(rep.rows[0].0, "witness");
}

#[test]
fn brute_force_distance_matches_closed_form() {
    let eps = 0.05;
    // Off the end cap, beside the side wall, and inside the core.
    let cases = [
        (Vec3::new(1.1, 0.0, 0.0), 0.1),
        (Vec3::new(0.5, 0.08, 0.0), 0.03),
        (Vec3::new(0.5, 0.0, 0.02), 0.0),
        (Vec3::new(-0.03, 0.09, 0.0), 0.05),
    ];
    for (y, expect) in cases {
        let d = brute_force_core_distance(eps, &y);
        assert!((d - expect).abs() < 1e-9, "{y:?}: {d} vs {expect}");
    }
}

#[test]
fn small_distance_suite_passes() {
    let rep = run_distance_suite(&CapacityParams::new(0.2, 0.05, 0.01).unwrap(), 300, 5);
    assert!(rep.passed(), "{}", rep.to_text());
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let p = CapacityParams::new(0.2, 0.1, 0.02).unwrap();
    let inv = arc_inverse(Vec3::new(0.5, 0.5, 0.5), 0.3, 0.2);
    let lo = Vec3::new(0.07, 0.07, 0.37);
    let hi = Vec3::new(0.93, 0.93, 0.63);
    let a = gap_monte_carlo(lo, hi, 100_000, 11, &p, &inv);
    let b = gap_monte_carlo(lo, hi, 100_000, 11, &p, &inv);
    assert_eq!(a, b);
    assert!(a > 0.0);
}

#[test]
fn gap_suite_without_oracle() {
    let chart = builtin_chart(BuiltinCurve::by_name("segment").unwrap(), 0.2, (0.0, 1.0)).unwrap();
    let cfg = GapSuite {
        eps: 0.1,
        deltas: vec![0.02, 0.01],
        t: 0.0,
        density: QuadDensity::default(),
        mc_samples: 1,
        seed: 0,
    };
    let rep = run_gap_suite(&chart, &cfg, None).unwrap();
    assert!(rep.passed(), "{}", rep.to_text());
    assert!(rep.verdict("quadrature vs Monte Carlo").is_none());
    // Straight segment: side shell, two flat caps and two quarter-torus rims.
    let (e, d) = (0.1f64, 0.02f64);
    let pi = std::f64::consts::PI;
    let rim = 2.0 * pi * (e + 4.0 * d / (3.0 * pi)) * pi * d * d / 4.0;
    let shell = pi * ((e + d).powi(2) - e * e) + 2.0 * pi * e * e * d + 2.0 * rim;
    let mapped = rep.column("mapped").unwrap();
    assert!((mapped[0] - shell).abs() / shell < 1e-3, "{} vs {shell}", mapped[0]);
}

#[test]
fn capacity_ladder_of_zero_is_zero() {
    let chart = builtin_chart(BuiltinCurve::by_name("segment").unwrap(), 0.1, (0.0, 1.0)).unwrap();
    let grid = Grid3D::unit_cube(8);
    let zero = |_: &Vec3| 0.0;
    let rep = run_capacity_ladder("zero", &chart, &zero, 0.0, 2, &grid, &QuadDensity::default()).unwrap();
    assert!(rep.column("pairing").unwrap().iter().all(|v| *v == 0.0));
    assert!(rep.column("error").unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn named_integrands() {
    let x = Vec3::new(0.2, 0.4, 0.0);
    assert_eq!(capacity_integrand("const").unwrap()(&x), 1.0);
    assert!((capacity_integrand("linear").unwrap()(&x) - 0.7).abs() < 1e-15);
    assert_eq!(capacity_integrand("bump").unwrap()(&Vec3::new(0.45, 0.5, 0.55)), 1.0);
    assert!(capacity_integrand("cubic").is_none());
}

#[test]
fn ladder_halves_eps() {
    let r = ladder(0.2, &[8, 16, 24], DeltaRule::Eps3);
    assert_eq!(r.len(), 3);
    assert!((r[0].eps - 0.1).abs() < 1e-15 && (r[2].eps - 0.025).abs() < 1e-15);
    assert!((r[1].delta - 0.05f64.powi(3)).abs() < 1e-18);
    assert_eq!(r[2].n, 24);
    assert_eq!(solver_grids(true).last(), Some(&192));
}

#[test]
fn report_text_and_csv() {
    let mut rep = ConvergenceReport::new("demo", &["a", "b"]);
    rep.push_row("r1", vec![1.0, 0.5]);
    rep.push_row("r2", vec![2.0, 0.25]);
    rep.check("hard ok", true, "fine");
    rep.inform("soft miss", false, "informational");
    assert!(rep.passed());
    assert_eq!(rep.column("b"), Some(vec![0.5, 0.25]));
    assert_eq!(rep.to_csv(), "label,a,b\nr1,1e0,5e-1\nr2,2e0,2.5e-1\n");
    let text = rep.to_text();
    assert!(text.contains("[PASS] hard ok: fine"));
    assert!(text.contains("[note] soft miss"));
    rep.check("hard miss", false, "bad");
    assert!(!rep.passed());
    assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
    assert!(!strictly_decreasing(&[3.0, 3.0]));
    assert_eq!(fmt_series(&[0.5]), "[5.0000e-1]");
}

#[test]
fn constants_check_passes_on_coarse_grid() {
    let rep = run_constants_check(8).unwrap();
    assert!(rep.passed(), "{}", rep.to_text());
}

#[test]
fn moving_segment_chart_stays_inside() {
    let s = Scenario::moving_segment();
    assert!(s.chart().is_ok());
    let mut bad = s.clone();
    bad.curve = CurveSource::Builtin(BuiltinCurve::by_name("segment").unwrap());
    assert!(bad.chart().is_err());
}
