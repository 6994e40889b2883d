//! Grids, tube quadrature, collar measure, capacity pairings and disk averages.

mod gauss;
mod grid;
mod tube;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gauss::{composite_gauss, gauss_legendre, gauss_on};
pub use grid::{BulkField, Grid1D, Grid3D, Stencil};
pub use tube::{
    gap_measure, straight_collar_volume, straight_collar_zeta_volume, tube_integral, GapMeasure, QuadDensity,
    TubeNode, TubeQuadrature, TubeRegion,
};

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::geometry::{SliceJet, TubeChart, Vec3};

/// `int_Omega f dx` by the two-point Gauss rule in every cell.
pub fn domain_integral(grid: &Grid3D, f: impl Fn(&Vec3) -> f64 + Sync) -> f64 {
    grid.cell_means(f).iter().sum::<f64>() * grid.cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingRoute {
    /// Tube quadrature nodes evaluate `f` directly.
    Tube,
    /// Through the binned cell averages of the cutoff, as the solver sees them.
    Grid,
}

/// Cell averages of the tube contributions to the coefficients at one time.
///
/// Each cell stores `Z = int_cell zeta`, the diagonal of
/// `int_cell zeta (frame tensor)` and `int_cell zeta (c v_C - v)`, all
/// obtained by binning tube quadrature nodes into cells.
#[derive(Debug, Clone)]
pub struct CellCoefficients {
    pub t: f64,
    pub zeta_volume: Vec<f64>,
    pub tensor_diag: Vec<Vec3>,
    pub velocity_excess: Vec<Vec3>,
    contrast: f64,
    k0: f64,
    cell_volume: f64,
}

impl CellCoefficients {
    pub fn build(grid: &Grid3D, coeffs: &Coefficients, t: f64, density: &QuadDensity) -> Result<Self> {
        let quad = TubeQuadrature::support(coeffs.chart, &coeffs.params, t, density)?;
        Self::from_quadrature(grid, coeffs, &quad)
    }

    pub fn from_quadrature(grid: &Grid3D, coeffs: &Coefficients, quad: &TubeQuadrature) -> Result<Self> {
        let t = quad.t;
        let c = coeffs.params.contrast();
        let m = coeffs.material;
        let contributions: Vec<Result<(usize, f64, Vec3, Vec3)>> = quad
            .nodes
            .par_iter()
            .map(|n| {
                let cell = grid.cell_of(&n.point).ok_or(Error::OutsideGrid {
                    point: [n.point.x, n.point.y, n.point.z],
                })?;
                let wz = n.weight() * n.zeta;
                let frame = quad.stations[n.station].frame;
                let y = n.coords();
                let ks = m.k_s.eval(t, &y);
                let kn = m.k_n.eval(t, &y);
                let mut diag = Vec3::zeros();
                for d in 0..3 {
                    let (a, b, e) = (frame.t_vec[d], frame.n_vec[d], frame.b_vec[d]);
                    diag[d] = ks * a * a + kn * (b * b + e * e);
                }
                let excess = c * m.v_c.eval(t, &n.point) - m.v.eval(t, &n.point);
                Ok((cell, wz, wz * diag, wz * excess))
            })
            .collect();
        let nc = grid.cell_count();
        let mut out = CellCoefficients {
            t,
            zeta_volume: vec![0.0; nc],
            tensor_diag: vec![Vec3::zeros(); nc],
            velocity_excess: vec![Vec3::zeros(); nc],
            contrast: c,
            k0: m.k0,
            cell_volume: grid.cell_volume(),
        };
        for r in contributions {
            let (cell, z, k, v) = r?;
            out.zeta_volume[cell] += z;
            out.tensor_diag[cell] += k;
            out.velocity_excess[cell] += v;
        }
        Ok(out)
    }

    /// All-bulk coefficients: `a = 1`, `K = k0`, no velocity excess.
    pub fn empty(grid: &Grid3D, k0: f64, t: f64) -> Self {
        let nc = grid.cell_count();
        CellCoefficients {
            t,
            zeta_volume: vec![0.0; nc],
            tensor_diag: vec![Vec3::zeros(); nc],
            velocity_excess: vec![Vec3::zeros(); nc],
            contrast: 1.0,
            k0,
            cell_volume: grid.cell_volume(),
        }
    }

    /// Cell mean of `a`.
    pub fn a(&self, cell: usize) -> f64 {
        1.0 + (self.contrast - 1.0) * self.zeta_volume[cell] / self.cell_volume
    }

    /// Cell mean of the diagonal of `K`.
    pub fn k_diag(&self, cell: usize) -> Vec3 {
        let z = self.zeta_volume[cell];
        (self.contrast * self.tensor_diag[cell] - Vec3::repeat(self.k0 * z)) / self.cell_volume + Vec3::repeat(self.k0)
    }

    /// Cell mean of `zeta (c v_C - v)`, to be added to the bulk velocity.
    pub fn velocity_tube_part(&self, cell: usize) -> Vec3 {
        self.velocity_excess[cell] / self.cell_volume
    }

    pub fn a_values(&self) -> Vec<f64> {
        (0..self.zeta_volume.len()).map(|i| self.a(i)).collect()
    }
}

/// `int_Omega a f dx` split as `int f + (c - 1) int zeta f`.
pub fn capacity_pairing(
    grid: &Grid3D,
    coeffs: &Coefficients,
    f: impl Fn(&Vec3) -> f64 + Sync,
    t: f64,
    route: PairingRoute,
    density: &QuadDensity,
) -> Result<f64> {
    let base = domain_integral(grid, &f);
    let c = coeffs.params.contrast();
    let quad = TubeQuadrature::support(coeffs.chart, &coeffs.params, t, density)?;
    let excess = match route {
        PairingRoute::Tube => quad
            .nodes
            .iter()
            .filter(|n| grid.contains(&n.point))
            .map(|n| n.weight() * n.zeta * f(&n.point))
            .sum::<f64>(),
        PairingRoute::Grid => {
            let mut z = vec![0.0; grid.cell_count()];
            for n in &quad.nodes {
                if let Some(cell) = grid.cell_of(&n.point) {
                    z[cell] += n.weight() * n.zeta;
                }
            }
            let means = grid.cell_means(&f);
            z.iter().zip(&means).map(|(a, b)| a * b).sum::<f64>()
        }
    };
    Ok(base + (c - 1.0) * excess)
}

/// `int_Omega f dx + pi eps0^2 int_0^1 f(gamma) |d_s gamma| ds`.
pub fn capacity_limit_target(
    grid: &Grid3D,
    chart: &TubeChart,
    f: impl Fn(&Vec3) -> f64 + Sync,
    t: f64,
) -> Result<f64> {
    let base = domain_integral(grid, &f);
    let mut line = 0.0;
    for (s, w) in composite_gauss(0.0, 1.0, 64, 4) {
        let x = chart.eval_curve(t, s)?;
        line += w * f(&x) * chart.curve().tangent(t, s).norm();
    }
    Ok(base + std::f64::consts::PI * chart.eps0().powi(2) * line)
}

/// Polar quadrature of the disk of radius `radius` (unit total weight).
pub fn disk_rule(radius: f64, radial: usize, angular: usize) -> Vec<(f64, f64, f64)> {
    let area = std::f64::consts::PI * radius * radius;
    let mut out = Vec::with_capacity(radial * angular);
    for (r, wr) in gauss_on(0.0, radius, radial) {
        for k in 0..angular {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / angular as f64;
            out.push((r * th.cos(), r * th.sin(), wr * r * std::f64::consts::TAU / angular as f64 / area));
        }
    }
    out
}

/// Cross-section means of `u` and of its `(s, nu, omega)` gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAverage {
    pub value: f64,
    pub grad: Vec3,
}

/// Disk average at one station, with the field interpolated trilinearly.
pub fn disk_average_at(
    grid: &Grid3D,
    values: &[f64],
    jet: &SliceJet,
    radius: f64,
    density: &QuadDensity,
) -> Result<DiskAverage> {
    let mut value = 0.0;
    let mut grad = Vec3::zeros();
    for (nu, omega, w) in disk_rule(radius, density.radial, density.angular) {
        let x = jet.point(nu, omega);
        if !grid.contains(&x) {
            return Err(Error::OutsideGrid { point: [x.x, x.y, x.z] });
        }
        value += w * grid.interpolate(values, &x);
        grad += w * jet.grad_f(nu, omega).transpose() * grid.interpolate_gradient(values, &x);
    }
    Ok(DiskAverage { value, grad })
}

pub fn disk_average(
    grid: &Grid3D,
    field: &BulkField,
    chart: &TubeChart,
    t: f64,
    s: f64,
    radius: f64,
    density: &QuadDensity,
) -> Result<DiskAverage> {
    if !(radius > 0.0 && radius <= chart.eps0()) {
        return Err(Error::Domain {
            what: "disk radius",
            value: radius,
            lo: 0.0,
            hi: chart.eps0(),
        });
    }
    let jet = chart.jet(t, s)?;
    disk_average_at(grid, &field.values, &jet, radius, density)
}

/// Sparse weights `w_j` with `sum_j w_j u_j` equal to the disk average of the
/// trilinear interpolant; the weights sum to one.
pub fn disk_weights(grid: &Grid3D, jet: &SliceJet, radius: f64, density: &QuadDensity) -> Result<Vec<(usize, f64)>> {
    let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for (nu, omega, w) in disk_rule(radius, density.radial, density.angular) {
        let x = jet.point(nu, omega);
        if !grid.contains(&x) {
            return Err(Error::OutsideGrid { point: [x.x, x.y, x.z] });
        }
        for (cell, wc) in grid.stencil(&x) {
            if wc != 0.0 {
                *acc.entry(cell).or_insert(0.0) += w * wc;
            }
        }
    }
    let total: f64 = acc.values().sum();
    Ok(acc.into_iter().map(|(c, w)| (c, w / total)).collect())
}

#[cfg(test)]
mod tests;
