//! Quadrature in tube coordinates.
//!
//! The collar `[0 < d_eps < delta]` is parameterized by the distance `eta`
//! from the core boundary, so the cutoff `1 - eta / delta` is resolved exactly
//! whatever the size of `delta`. The core boundary splits into the lateral
//! shell, two flat caps, and two quarter-round rims where the caps meet the
//! shell.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gauss::{composite_gauss, gauss_on};
use crate::coefficients::{cutoff_chi, dist_core, CapacityParams};
use crate::error::Result;
use crate::geometry::{SliceJet, TubeChart, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TubeRegion {
    /// `[0, 1] x D_eps`.
    Core,
    /// `[0 < d_eps < delta]`.
    Collar,
    /// `[-eps0, 1 + eps0] x D_eps0`.
    FullTube,
}

/// Node counts of the tube quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadDensity {
    pub radial: usize,
    pub angular: usize,
    /// Total Gauss nodes along `s` (panels of four).
    pub axial: usize,
    /// Gauss nodes across the collar width and along each rim.
    pub collar: usize,
}

impl Default for QuadDensity {
    fn default() -> Self {
        QuadDensity {
            radial: 16,
            angular: 32,
            axial: 128,
            collar: 8,
        }
    }
}

impl QuadDensity {
    fn axial_rule(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let order = 4.min(self.axial.max(1));
        composite_gauss(a, b, (self.axial / order).max(1), order)
    }

    fn angles(&self) -> Vec<(f64, f64)> {
        let m = self.angular.max(1);
        (0..m)
            .map(|k| (2.0 * PI * (k as f64 + 0.5) / m as f64, 2.0 * PI / m as f64))
            .collect()
    }
}

/// One quadrature node: chart coordinates, the geometric weight in
/// `ds dnu domega`, the Jacobian there, the cutoff, and the mapped point.
#[derive(Debug, Clone, Copy)]
pub struct TubeNode {
    pub station: usize,
    pub s: f64,
    pub nu: f64,
    pub omega: f64,
    pub flat_weight: f64,
    pub jacobian: f64,
    pub zeta: f64,
    pub point: Vec3,
}

impl TubeNode {
    /// Ambient volume weight `flat_weight * J_F`.
    pub fn weight(&self) -> f64 {
        self.flat_weight * self.jacobian
    }

    pub fn coords(&self) -> Vec3 {
        Vec3::new(self.s, self.nu, self.omega)
    }
}

/// Quadrature nodes of a region at one time, grouped by axial station.
#[derive(Debug, Clone)]
pub struct TubeQuadrature {
    pub t: f64,
    pub stations: Vec<SliceJet>,
    pub nodes: Vec<TubeNode>,
}

/// A cross-section ring set at one `s`: `(rho, radial weight incl. rho, zeta)`.
struct StationPlan {
    s: f64,
    weight: f64,
    rings: Vec<(f64, f64, f64)>,
}

fn polar_rings(r0: f64, r1: f64, radial: usize, zeta: impl Fn(f64) -> f64) -> Vec<(f64, f64, f64)> {
    gauss_on(r0, r1, radial)
        .into_iter()
        .map(|(r, w)| (r, w * r, zeta(r)))
        .collect()
}

fn plan(p: &CapacityParams, region: TubeRegion, q: &QuadDensity) -> Vec<StationPlan> {
    let mut out = Vec::new();
    match region {
        TubeRegion::Core => {
            for (s, ws) in q.axial_rule(0.0, 1.0) {
                out.push(StationPlan {
                    s,
                    weight: ws,
                    rings: polar_rings(0.0, p.eps, q.radial, |_| 1.0),
                });
            }
        }
        TubeRegion::FullTube => {
            for (s, ws) in q.axial_rule(-p.eps0, 1.0 + p.eps0) {
                let rings = polar_rings(0.0, p.eps0, 2 * q.radial, |r| {
                    cutoff_chi(p.delta, dist_core(p, s, r, 0.0))
                });
                out.push(StationPlan { s, weight: ws, rings });
            }
        }
        TubeRegion::Collar => {
            let eta = gauss_on(0.0, p.delta, q.collar);
            let zeta = |e: f64| 1.0 - e / p.delta;
            // lateral shell
            for (s, ws) in q.axial_rule(0.0, 1.0) {
                let rings = eta
                    .iter()
                    .map(|&(e, we)| (p.eps + e, we * (p.eps + e), zeta(e)))
                    .collect();
                out.push(StationPlan { s, weight: ws, rings });
            }
            // flat caps
            for &(e, we) in &eta {
                for s in [-e, 1.0 + e] {
                    out.push(StationPlan {
                        s,
                        weight: we,
                        rings: polar_rings(0.0, p.eps, q.radial, |_| zeta(e)),
                    });
                }
            }
            // rims: s = -eta sin(alpha), rho = eps + eta cos(alpha), area element eta
            let alpha = gauss_on(0.0, FRAC_PI_2, q.collar);
            for &(e, we) in &eta {
                for &(al, wa) in &alpha {
                    let rho = p.eps + e * al.cos();
                    for s in [-e * al.sin(), 1.0 + e * al.sin()] {
                        out.push(StationPlan {
                            s,
                            weight: we * wa * e,
                            rings: vec![(rho, rho, zeta(e))],
                        });
                    }
                }
            }
        }
    }
    out
}

impl TubeQuadrature {
    pub fn build(
        chart: &TubeChart,
        p: &CapacityParams,
        t: f64,
        region: TubeRegion,
        density: &QuadDensity,
    ) -> Result<Self> {
        let stations = plan(p, region, density);
        let angles = density.angles();
        let built: Vec<Result<(SliceJet, Vec<TubeNode>)>> = stations
            .par_iter()
            .enumerate()
            .map(|(k, st)| {
                let jet = chart.jet(t, st.s)?;
                let mut nodes = Vec::with_capacity(st.rings.len() * angles.len());
                for &(rho, wr, zeta) in &st.rings {
                    for &(th, wt) in &angles {
                        let (nu, omega) = (rho * th.cos(), rho * th.sin());
                        nodes.push(TubeNode {
                            station: k,
                            s: st.s,
                            nu,
                            omega,
                            flat_weight: st.weight * wr * wt,
                            jacobian: jet.det_jf(nu, omega)?,
                            zeta,
                            point: jet.point(nu, omega),
                        });
                    }
                }
                Ok((jet, nodes))
            })
            .collect();
        let mut jets = Vec::with_capacity(built.len());
        let mut nodes = Vec::new();
        for b in built {
            let (jet, mut n) = b?;
            jets.push(jet);
            nodes.append(&mut n);
        }
        Ok(TubeQuadrature {
            t,
            stations: jets,
            nodes,
        })
    }

    /// Core and collar together: every node where the cutoff is positive.
    pub fn support(chart: &TubeChart, p: &CapacityParams, t: f64, density: &QuadDensity) -> Result<Self> {
        let mut core = Self::build(chart, p, t, TubeRegion::Core, density)?;
        let collar = Self::build(chart, p, t, TubeRegion::Collar, density)?;
        let offset = core.stations.len();
        core.stations.extend(collar.stations);
        core.nodes.extend(collar.nodes.into_iter().map(|mut n| {
            n.station += offset;
            n
        }));
        Ok(core)
    }

    /// `sum weight * J_F * f(node)` in node order.
    pub fn integrate(&self, f: impl Fn(&TubeNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight() * f(n)).sum()
    }
}

/// `int f J_F ds dnu domega` over a region at time `t`.
pub fn tube_integral(
    chart: &TubeChart,
    p: &CapacityParams,
    t: f64,
    region: TubeRegion,
    density: &QuadDensity,
    f: impl Fn(f64, f64, f64, f64) -> f64,
) -> Result<f64> {
    let q = TubeQuadrature::build(chart, p, t, region, density)?;
    Ok(q.integrate(|n| f(t, n.s, n.nu, n.omega)))
}

/// Collar measure in chart coordinates and its image volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMeasure {
    pub flat: f64,
    pub mapped: f64,
}

pub fn gap_measure(chart: &TubeChart, p: &CapacityParams, t: f64, density: &QuadDensity) -> Result<GapMeasure> {
    let q = TubeQuadrature::build(chart, p, t, TubeRegion::Collar, density)?;
    Ok(GapMeasure {
        flat: q.nodes.iter().map(|n| n.flat_weight).sum(),
        mapped: q.nodes.iter().map(TubeNode::weight).sum(),
    })
}

/// Closed-form collar measure for a straight unit-speed tube.
pub fn straight_collar_volume(eps: f64, delta: f64) -> f64 {
    let shell = PI * (2.0 * eps * delta + delta * delta);
    let caps = 2.0 * PI * eps * eps * delta;
    let rims = 2.0 * 2.0 * PI * (FRAC_PI_2 * eps * delta * delta / 2.0 + delta.powi(3) / 3.0);
    shell + caps + rims
}

/// Closed-form cutoff-weighted collar volume `int zeta` for a straight unit-speed tube.
pub fn straight_collar_zeta_volume(eps: f64, delta: f64) -> f64 {
    let shell = PI * (eps * delta + delta * delta / 3.0);
    let caps = PI * eps * eps * delta;
    let rims = PI * PI * eps * delta * delta / 3.0 + PI * delta.powi(3) / 3.0;
    shell + caps + rims
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_chart, BuiltinCurve};

    #[test]
    fn tube_volumes() {
        let seg = builtin_chart(BuiltinCurve::unit_segment(), 0.1, (0.0, 1.0)).unwrap();
        let p = CapacityParams::new(0.1, 0.05, 0.01).unwrap();
        let q = QuadDensity::default();
        let core = tube_integral(&seg, &p, 0.0, TubeRegion::Core, &q, |_, _, _, _| 1.0).unwrap();
        assert!((core - PI * 0.0025).abs() < 1e-13);
        let full = tube_integral(&seg, &p, 0.0, TubeRegion::FullTube, &q, |_, _, _, _| 1.0).unwrap();
        assert!((full - PI * 0.01 * 1.2).abs() < 1e-12);
        let collar = tube_integral(&seg, &p, 0.0, TubeRegion::Collar, &q, |_, _, _, _| 1.0).unwrap();
        assert!((collar - straight_collar_volume(0.05, 0.01)).abs() < 1e-12);
        let zc = TubeQuadrature::build(&seg, &p, 0.0, TubeRegion::Collar, &q)
            .unwrap()
            .integrate(|n| n.zeta);
        assert!((zc - straight_collar_zeta_volume(0.05, 0.01)).abs() < 1e-12);

        let arc = builtin_chart(
            BuiltinCurve::Arc {
                center: [0.0; 3],
                radius: 0.3,
                angular_velocity: 0.0,
            },
            0.1,
            (0.0, 1.0),
        )
        .unwrap();
        let core = tube_integral(&arc, &p, 0.0, TubeRegion::Core, &q, |_, _, _, _| 1.0).unwrap();
        assert!((core - PI * 0.0025 * 0.3).abs() < 1e-10);
    }

    #[test]
    fn gap_measure_shrinks_linearly() {
        let seg = builtin_chart(BuiltinCurve::unit_segment(), 0.1, (0.0, 1.0)).unwrap();
        let q = QuadDensity::default();
        let m = |d: f64| gap_measure(&seg, &CapacityParams::new(0.1, 0.05, d).unwrap(), 0.0, &q).unwrap();
        let a = m(0.004);
        let b = m(0.002);
        assert!((a.flat - a.mapped).abs() < 1e-14);
        let ratio = b.flat / a.flat;
        assert!(ratio > 0.4 && ratio < 0.6);
    }
}
