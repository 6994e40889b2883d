//! Rotation-minimizing frames by the double-reflection construction.
//!
//! The normal is propagated along `s` from the left end of the table and
//! evaluated between knots by cubic Hermite interpolation. The knot slopes
//! come from the rotation-minimizing ODE `n' = -(n . t') t`, so the
//! interpolant is C1 and tracks the exact frame to fourth order in the knot
//! spacing.

use super::curves::CurvePath;
use super::{Frame, Vec3};

#[derive(Debug, Clone)]
pub(crate) struct RmfTable {
    s_lo: f64,
    ds: f64,
    normals: Vec<Vec3>,
    slopes: Vec<Vec3>,
}

fn unit_tangent(curve: &dyn CurvePath, t: f64, s: f64) -> Vec3 {
    curve.tangent(t, s).normalize()
}

pub(crate) fn seed_normal(tangent: &Vec3, seed: &Vec3) -> Vec3 {
    let mut n = seed - seed.dot(tangent) * tangent;
    if n.norm() < 1e-6 {
        let alt = if tangent.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        n = alt - alt.dot(tangent) * tangent;
    }
    n.normalize()
}

impl RmfTable {
    pub(crate) fn build(curve: &dyn CurvePath, t: f64, s_lo: f64, s_hi: f64, intervals: usize, seed: &Vec3) -> Self {
        let ds = (s_hi - s_lo) / intervals as f64;
        let knots: Vec<f64> = (0..=intervals).map(|i| s_lo + i as f64 * ds).collect();
        let points: Vec<Vec3> = knots.iter().map(|&s| curve.position(t, s)).collect();
        let tangents: Vec<Vec3> = knots.iter().map(|&s| unit_tangent(curve, t, s)).collect();

        let mut normals = Vec::with_capacity(knots.len());
        normals.push(seed_normal(&tangents[0], seed));
        for i in 0..intervals {
            let r = normals[i];
            let v1 = points[i + 1] - points[i];
            let c1 = v1.dot(&v1);
            let (r_l, t_l) = if c1 > 0.0 {
                (
                    r - (2.0 / c1) * v1.dot(&r) * v1,
                    tangents[i] - (2.0 / c1) * v1.dot(&tangents[i]) * v1,
                )
            } else {
                (r, tangents[i])
            };
            let v2 = tangents[i + 1] - t_l;
            let c2 = v2.dot(&v2);
            let next = if c2 > 1e-300 { r_l - (2.0 / c2) * v2.dot(&r_l) * v2 } else { r_l };
            let tn = tangents[i + 1];
            normals.push((next - next.dot(&tn) * tn).normalize());
        }

        let h = 1e-4 * (s_hi - s_lo);
        let slopes = knots
            .iter()
            .zip(&normals)
            .zip(&tangents)
            .map(|((&s, n), tv)| {
                let dt = (unit_tangent(curve, t, s - 2.0 * h) - 8.0 * unit_tangent(curve, t, s - h)
                    + 8.0 * unit_tangent(curve, t, s + h)
                    - unit_tangent(curve, t, s + 2.0 * h))
                    / (12.0 * h);
                -n.dot(&dt) * tv
            })
            .collect();

        RmfTable {
            s_lo,
            ds,
            normals,
            slopes,
        }
    }

    pub(crate) fn frame(&self, tangent: &Vec3, s: f64) -> Frame {
        let last = self.normals.len() - 2;
        let x = (s - self.s_lo) / self.ds;
        let i = (x.floor().max(0.0) as usize).min(last);
        let u = x - i as f64;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let n = h00 * self.normals[i]
            + h10 * self.ds * self.slopes[i]
            + h01 * self.normals[i + 1]
            + h11 * self.ds * self.slopes[i + 1];
        let n = (n - n.dot(tangent) * tangent).normalize();
        Frame::new(*tangent, n, tangent.cross(&n))
    }
}
