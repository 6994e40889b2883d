use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_segment_chart() -> TubeChart {
    builtin_chart(BuiltinCurve::unit_segment(), 0.1, (0.0, 1.0)).unwrap()
}

fn arc_chart(eps0: f64) -> Result<TubeChart> {
    builtin_chart(
        BuiltinCurve::Arc {
            center: [0.0; 3],
            radius: 0.3,
            angular_velocity: 0.0,
        },
        eps0,
        (0.0, 1.0),
    )
}

fn helix_chart() -> TubeChart {
    builtin_chart(BuiltinCurve::by_name("helix-wiggle").unwrap(), 0.02, (0.0, 1.0)).unwrap()
}

fn assert_mat_close(a: &Mat3, b: &Mat3, tol: f64) {
    assert!((a - b).amax() < tol, "{a} vs {b}");
}

#[test]
fn curve_evaluation() {
    let seg = unit_segment_chart();
    assert_eq!(seg.eval_curve(0.3, 0.5).unwrap(), Vec3::new(0.5, 0.0, 0.0));
    let tr = builtin_chart(
        BuiltinCurve::TranslatingSegment {
            origin: [0.0; 3],
            direction: [1.0, 0.0, 0.0],
            velocity: [0.0, 0.2, 0.0],
            normal_hint: [0.0, 1.0, 0.0],
        },
        0.1,
        (0.0, 1.0),
    )
    .unwrap();
    assert!((tr.eval_curve(1.0, 0.0).unwrap() - Vec3::new(0.0, 0.2, 0.0)).norm() < 1e-15);
    let arc = arc_chart(0.1).unwrap();
    assert!((arc.eval_curve(0.0, 0.0).unwrap() - Vec3::new(0.3, 0.0, 0.0)).norm() < 1e-15);
    assert!(matches!(seg.eval_curve(1.5, 0.5), Err(Error::Domain { .. })));
    assert!(matches!(seg.eval_curve(0.5, 1.2), Err(Error::Domain { .. })));
}

#[test]
fn frames() {
    let f = unit_segment_chart().eval_frame(0.0, 0.4).unwrap();
    assert_eq!(f.matrix(), Mat3::identity());
    let f = arc_chart(0.1).unwrap().eval_frame(0.0, 0.0).unwrap();
    assert!((f.t_vec - Vec3::y()).norm() < 1e-15);
    assert!((f.n_vec + Vec3::x()).norm() < 1e-15);
    assert!((f.b_vec - Vec3::z()).norm() < 1e-15);

    let rmf = TubeChart::new(
        Arc::new(BuiltinCurve::unit_segment()),
        0.1,
        (0.0, 1.0),
        FrameMode::RotationMinimizing,
    )
    .unwrap();
    for s in [-0.1, 0.0, 0.33, 0.9, 1.1] {
        let f = rmf.eval_frame(0.5, s).unwrap();
        assert!((f.n_vec - Vec3::y()).norm() < 1e-14);
    }
}

#[test]
fn rmf_frame_invariants_on_helix() {
    let curve = Arc::new(BuiltinCurve::by_name("helix-wiggle").unwrap());
    let chart = TubeChart::new(curve.clone(), 0.02, (0.0, 1.0), FrameMode::RotationMinimizing).unwrap();
    for i in 0..50 {
        let s = -0.02 + 1.04 * i as f64 / 49.0;
        let f = chart.eval_frame(0.25, s).unwrap();
        let d = f.defects();
        assert!(d.max_dot < 1e-12 && d.max_norm_error < 1e-12 && d.det_error < 1e-12);
        let fd = {
            let h = 1e-3;
            (curve.position(0.25, s - 2.0 * h) - 8.0 * curve.position(0.25, s - h) + 8.0 * curve.position(0.25, s + h)
                - curve.position(0.25, s + 2.0 * h))
                / (12.0 * h)
        };
        assert!((f.t_vec - fd.normalize()).norm() < 1e-8);
        // twist-free: d_s n has no b component
        let jet = chart.jet(0.25, s).unwrap();
        assert!(jet.twist_n().abs() < 1e-6, "twist {}", jet.twist_n());
    }
}

#[test]
fn gradient_identities_for_segment_and_arc() {
    let seg = unit_segment_chart();
    assert_mat_close(&seg.grad_f(0.2, 0.3, 0.05, -0.02).unwrap(), &Mat3::identity(), 1e-12);
    assert!((seg.det_jf(0.2, 0.3, 0.05, -0.02).unwrap() - 1.0).abs() < 1e-12);
    assert_mat_close(&seg.inv_grad_f(0.2, 0.3, 0.05, -0.02).unwrap(), &Mat3::identity(), 1e-12);
    assert_mat_close(&seg.metric_inv(0.2, 0.3, 0.05, -0.02).unwrap(), &Mat3::identity(), 1e-12);

    let arc = arc_chart(0.1).unwrap();
    let s = 0.7;
    let nu = 0.1;
    let g = arc.grad_f(0.0, s, nu, 0.0).unwrap();
    let tv = arc.eval_frame(0.0, s).unwrap().t_vec;
    assert!((g.column(0) - (0.3 - nu) * tv).norm() < 1e-9);
    assert!((arc.det_jf(0.0, s, nu, 0.0).unwrap() - 0.2).abs() < 1e-9);
    assert!((g.determinant() - 0.2).abs() < 1e-9);
    let expect = Mat3::from_diagonal(&Vec3::new(1.0 / 0.04, 1.0, 1.0));
    assert_mat_close(&arc.metric_inv(0.0, s, nu, 0.0).unwrap(), &expect, 1e-6);
}

#[test]
fn inverse_on_curve_matches_scaled_transpose() {
    let chart = helix_chart();
    let jet = chart.jet(0.4, 0.3).unwrap();
    let d = jet.dgamma;
    let m = Mat3::from_diagonal(&Vec3::new(1.0 / d.norm_squared(), 1.0, 1.0))
        * Mat3::from_columns(&[d, jet.frame.n_vec, jet.frame.b_vec]).transpose();
    assert_mat_close(&jet.inv_grad_f(0.0, 0.0).unwrap(), &m, 1e-12);
}

#[test]
fn helix_closed_forms_match_numeric_oracles() {
    let chart = helix_chart();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let t = rng.gen_range(0.0..1.0);
        let s = rng.gen_range(-0.02..1.02);
        let r = 0.02 * rng.gen::<f64>().sqrt();
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let (nu, om) = (r * th.cos(), r * th.sin());
        let jet = chart.jet(t, s).unwrap();
        let g = jet.grad_f(nu, om);
        let det = g.determinant();
        assert!((jet.det_jf(nu, om).unwrap() - det).abs() < 1e-8 * det.abs());
        let gram = g.transpose() * g;
        let mi = jet.metric_inv(nu, om).unwrap();
        assert_mat_close(&(gram * mi), &Mat3::identity(), 1e-10);
        assert_mat_close(&(g * jet.inv_grad_f(nu, om).unwrap()), &Mat3::identity(), 1e-10);
        let p = chart.space_time_jacobian(t, s, nu, om).unwrap();
        let pi = chart.space_time_jacobian_inv(t, s, nu, om).unwrap();
        assert!((pi * p - Matrix4::identity()).amax() < 1e-8);
    }
}

#[test]
fn velocities() {
    let seg = unit_segment_chart();
    let v = seg.curve_velocity(0.5, 0.5, 0.01, 0.0).unwrap();
    assert!(v.value.norm() < 1e-12);
    assert!(!v.one_sided);
    assert!(seg.curve_velocity(0.0, 0.5, 0.0, 0.0).unwrap().one_sided);

    let tr = builtin_chart(BuiltinCurve::by_name("translating-segment").unwrap(), 0.1, (0.0, 1.0)).unwrap();
    let v = tr.curve_velocity(0.5, 0.2, 0.03, 0.01).unwrap().value;
    assert!((v - Vec3::new(0.0, 0.2, 0.0)).norm() < 1e-9);

    let curve = BuiltinCurve::Arc {
        center: [0.0; 3],
        radius: 0.3,
        angular_velocity: 1.5,
    };
    let arc = builtin_chart(curve.clone(), 0.1, (0.0, 1.0)).unwrap();
    let v = arc.curve_velocity(0.4, 0.6, 0.0, 0.0).unwrap().value;
    assert!((v - curve.velocity_hint(0.4, 0.6).unwrap()).norm() < 1e-6);
}

#[test]
fn chart_inversion() {
    let seg = unit_segment_chart();
    let c = seg.invert_chart(0.0, &Vec3::new(0.5, 0.02, -0.01)).unwrap().unwrap();
    assert!((c.s - 0.5).abs() < 1e-12 && (c.nu - 0.02).abs() < 1e-12 && (c.omega + 0.01).abs() < 1e-12);
    assert!(seg.invert_chart(0.0, &Vec3::new(0.5, 0.5, 0.0)).unwrap().is_none());
    assert!(seg.invert_chart(0.0, &Vec3::new(1.3, 0.0, 0.0)).unwrap().is_none());

    let chart = helix_chart();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let t = rng.gen_range(0.0..1.0);
        let s = rng.gen_range(-0.02..1.02);
        let r = 0.0199 * rng.gen::<f64>().sqrt();
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = chart.map(t, s, r * th.cos(), r * th.sin()).unwrap();
        let c = chart.invert_chart(t, &x).unwrap().expect("inside");
        let back = chart.map(t, c.s, c.nu, c.omega).unwrap();
        assert!((back - x).norm() < 1e-9);
        assert!((c.s - s).abs() < 1e-8);
    }
}

#[test]
fn coercivity() {
    assert!((unit_segment_chart().coercivity_beta(8).unwrap() - 1.0).abs() < 1e-12);
    let arc = arc_chart(0.1).unwrap();
    let beta = arc.coercivity_beta(16).unwrap();
    // On the arc M J_F = diag(1/(R - nu), R - nu, R - nu) at omega = 0.
    let mut oracle = f64::INFINITY;
    for i in 0..=400 {
        let nu = -0.1 + 0.2 * i as f64 / 400.0;
        let j = 0.3 - nu;
        oracle = oracle.min((1.0 / j).min(j));
    }
    assert!((beta - oracle).abs() < 1e-9, "{beta} vs {oracle}");
}

#[test]
fn arc_beyond_reach_is_rejected() {
    match arc_chart(0.35) {
        Err(Error::ChartValidity { nu, omega, .. }) => assert!(nu.hypot(omega) >= 0.3 - 1e-12),
        other => panic!("expected chart failure, got {other:?}"),
    }
}

#[test]
fn divergence() {
    let seg = unit_segment_chart();
    let c = seg.divergence_in_tube(&|_| Vec3::new(1.0, -2.0, 0.5), 0.0, 0.5, 0.01, 0.02, 1e-3).unwrap();
    assert!(c.abs() < 1e-10);
    let d = seg.divergence_in_tube(&|x| *x, 0.0, 0.5, 0.01, 0.02, 1e-3).unwrap();
    assert!((d - 3.0).abs() < 1e-9);

    let chart = helix_chart();
    let q = |x: &Vec3| Vec3::new(x.x * x.y + x.z * x.z, x.y * x.y * x.z - x.x, x.x * x.z + 2.0 * x.y);
    let div = |x: &Vec3| x.y + 2.0 * x.y * x.z + x.x;
    for (t, s, nu, om) in [(0.2, 0.3, 0.01, -0.005), (0.7, 0.9, -0.012, 0.004)] {
        let got = chart.divergence_in_tube(&q, t, s, nu, om, 1e-3).unwrap();
        let x = chart.map(t, s, nu, om).unwrap();
        assert!((got - div(&x)).abs() < 1e-4, "{got} vs {}", div(&x));
    }
}

#[test]
fn inside_box_and_smoothness() {
    let tr = builtin_chart(BuiltinCurve::by_name("translating-segment").unwrap(), 0.1, (0.0, 0.5)).unwrap();
    tr.check_inside_box(&Vec3::zeros(), &Vec3::repeat(1.0), 32).unwrap();
    let seg = builtin_chart(BuiltinCurve::by_name("segment").unwrap(), 0.1, (0.0, 0.5)).unwrap();
    assert!(seg.check_inside_box(&Vec3::zeros(), &Vec3::repeat(1.0), 32).is_err());
    let h = helix_chart();
    let (a, b) = h.smoothness_bounds(32);
    let (c, d) = h.smoothness_bounds(64);
    assert!((a - c).abs() < 0.1 * c && (b - d).abs() < 0.2 * d);
}
