use super::*;
use crate::coefficients::{CapacityParams, MaterialParams};
use crate::geometry::{builtin_chart, BuiltinCurve};
use std::f64::consts::PI;

fn segment_chart(eps0: f64) -> TubeChart {
    builtin_chart(BuiltinCurve::by_name("segment").unwrap(), eps0, (0.0, 1.0)).unwrap()
}

#[test]
fn limit_target_examples() {
    let grid = Grid3D::unit_cube(8);
    let chart = segment_chart(0.1);
    let one = capacity_limit_target(&grid, &chart, |_| 1.0, 0.0).unwrap();
    assert!((one - (1.0 + PI * 0.01)).abs() < 1e-12);
    assert!((one - 1.0314159).abs() < 1e-7);
    assert_eq!(capacity_limit_target(&grid, &chart, |_| 0.0, 0.0).unwrap(), 0.0);
    let lin = capacity_limit_target(&grid, &chart, |x| x.x, 0.0).unwrap();
    assert!((lin - (0.5 + PI * 0.01 * 0.5)).abs() < 1e-12);
}

#[test]
fn pairing_examples() {
    let grid = Grid3D::unit_cube(8);
    let chart = segment_chart(0.1);
    let m = MaterialParams::unit();
    let p = CapacityParams::new(0.1, 0.05, 0.01).unwrap();
    let c = Coefficients::new(&chart, p, &m).unwrap();
    let q = QuadDensity::default();
    for route in [PairingRoute::Tube, PairingRoute::Grid] {
        assert_eq!(capacity_pairing(&grid, &c, |_| 0.0, 0.0, route, &q).unwrap(), 0.0);
        // The segment spans the cube, so caps and rims fall outside it.
        let got = capacity_pairing(&grid, &c, |_| 1.0, 0.0, route, &q).unwrap();
        let zv = PI * p.eps * p.eps + PI * (p.eps * p.delta + p.delta * p.delta / 3.0);
        let expect = 1.0 + (p.contrast() - 1.0) * zv;
        assert!((got - expect).abs() < 1e-10, "{route:?}: {got} vs {expect}");
    }
}

#[test]
fn disk_average_examples() {
    let grid = Grid3D::unit_cube(16);
    let chart = segment_chart(0.1);
    let q = QuadDensity::default();
    let c = BulkField::new(vec![2.5; grid.cell_count()], 0.0).unwrap();
    let d = disk_average(&grid, &c, &chart, 0.0, 0.4, 0.05, &q).unwrap();
    assert!((d.value - 2.5).abs() < 1e-13 && d.grad.norm() < 1e-12);
    let lin = BulkField::new(grid.sample(|x| x.x), 0.0).unwrap();
    let d = disk_average(&grid, &lin, &chart, 0.0, 0.4, 0.05, &q).unwrap();
    assert!((d.value - 0.4).abs() < 1e-13);
    assert!((d.grad - Vec3::x()).norm() < 1e-12);
    let far = builtin_chart(
        BuiltinCurve::Segment {
            origin: [0.0, 0.98, 0.5],
            direction: [1.0, 0.0, 0.0],
            normal_hint: [0.0, 1.0, 0.0],
        },
        0.1,
        (0.0, 1.0),
    )
    .unwrap();
    assert!(matches!(
        disk_average(&grid, &lin, &far, 0.0, 0.4, 0.05, &q),
        Err(Error::OutsideGrid { .. })
    ));
}

#[test]
fn disk_average_of_radial_field_converges() {
    let chart = builtin_chart(BuiltinCurve::by_name("arc").unwrap(), 0.1, (0.0, 1.0)).unwrap();
    let f = |x: &Vec3| ((x - Vec3::new(0.5, 0.5, 0.5)).norm_squared() * 6.0).cos();
    let q = QuadDensity::default();
    let jet = chart.jet(0.0, 0.7).unwrap();
    let mut exact = 0.0;
    for (nu, om, w) in disk_rule(0.05, 32, 64) {
        exact += w * f(&jet.point(nu, om));
    }
    let grid = Grid3D::unit_cube(64);
    let field = BulkField::new(grid.sample(f), 0.0).unwrap();
    let d = disk_average(&grid, &field, &chart, 0.0, 0.7, 0.05, &q).unwrap();
    assert!((d.value - exact).abs() < 1e-3, "{} vs {exact}", d.value);
}

#[test]
fn disk_weights_reproduce_disk_average() {
    let chart = builtin_chart(BuiltinCurve::by_name("helix-wiggle").unwrap(), 0.04, (0.0, 1.0)).unwrap();
    let grid = Grid3D::unit_cube(20);
    let vals = grid.sample(|x| (3.0 * x.x).sin() + x.y * x.z);
    let q = QuadDensity::default();
    let jet = chart.jet(0.3, 0.6).unwrap();
    let w = disk_weights(&grid, &jet, 0.1, &q).unwrap();
    let total: f64 = w.iter().map(|p| p.1).sum();
    assert!((total - 1.0).abs() < 1e-14);
    let via_weights: f64 = w.iter().map(|(c, wc)| wc * vals[*c]).sum();
    let direct = disk_average_at(&grid, &vals, &jet, 0.1, &q).unwrap().value;
    assert!((via_weights - direct).abs() < 1e-13);
}

#[test]
fn cell_coefficients_conserve_tube_totals() {
    let chart = builtin_chart(BuiltinCurve::by_name("translating-segment").unwrap(), 0.2, (0.0, 1.0)).unwrap();
    let mut m = MaterialParams::unit();
    m.k_s = crate::coefficients::ScalarField::constant(3.0);
    let p = CapacityParams::new(0.2, 0.1, 0.001).unwrap();
    let c = Coefficients::new(&chart, p, &m).unwrap();
    let grid = Grid3D::unit_cube(16);
    let q = QuadDensity::default();
    let cells = CellCoefficients::build(&grid, &c, 0.2, &q).unwrap();
    let total_z: f64 = cells.zeta_volume.iter().sum();
    let quad = TubeQuadrature::support(&chart, &p, 0.2, &q).unwrap();
    assert!((total_z - quad.integrate(|n| n.zeta)).abs() < 1e-14);
    // Straight tube with J_F = |d_s gamma| = 0.6.
    let expect = 0.6 * (PI * 0.01 + straight_collar_zeta_volume(0.1, 0.001));
    assert!((total_z - expect).abs() < 1e-14);
    let mass_a: f64 = cells.a_values().iter().sum::<f64>() * grid.cell_volume();
    assert!((mass_a - (1.0 + (p.contrast() - 1.0) * total_z)).abs() < 1e-12);
    for i in 0..grid.cell_count() {
        let k = cells.k_diag(i);
        let a = cells.a(i);
        assert!(k.min() >= m.theta * a - 1e-12);
        if cells.zeta_volume[i] == 0.0 {
            assert_eq!(a, 1.0);
            assert_eq!(k, Vec3::repeat(1.0));
        }
    }
}
