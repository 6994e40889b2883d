use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Uniform cell-centred grid on an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid3D {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

/// Trilinear stencil: eight cell indices with weights summing to one.
pub type Stencil = [(usize, f64); 8];

impl Grid3D {
    pub fn new(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Result<Self> {
        for d in 0..3 {
            if !(hi[d] > lo[d]) || n[d] == 0 {
                return Err(Error::InvalidParams(format!(
                    "grid axis {d}: need lo < hi and at least one cell, got [{}, {}] with {} cells",
                    lo[d], hi[d], n[d]
                )));
            }
        }
        Ok(Grid3D { lo, hi, n })
    }

    pub fn unit_cube(n: usize) -> Self {
        Grid3D {
            lo: [0.0; 3],
            hi: [1.0; 3],
            n: [n; 3],
        }
    }

    pub fn lo_vec(&self) -> Vec3 {
        Vec3::from(self.lo)
    }

    pub fn hi_vec(&self) -> Vec3 {
        Vec3::from(self.hi)
    }

    pub fn spacing(&self) -> Vec3 {
        Vec3::new(
            (self.hi[0] - self.lo[0]) / self.n[0] as f64,
            (self.hi[1] - self.lo[1]) / self.n[1] as f64,
            (self.hi[2] - self.lo[2]) / self.n[2] as f64,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h.x * h.y * h.z
    }

    /// Area of a face normal to axis `d`.
    pub fn face_area(&self, d: usize) -> f64 {
        self.cell_volume() / self.spacing()[d]
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    pub fn center(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.ijk(idx);
        let h = self.spacing();
        self.lo_vec() + Vec3::new((i as f64 + 0.5) * h.x, (j as f64 + 0.5) * h.y, (k as f64 + 0.5) * h.z)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|d| x[d] >= self.lo[d] && x[d] <= self.hi[d])
    }

    /// Index of the cell containing `x` (upper faces belong to the last cell).
    pub fn cell_of(&self, x: &Vec3) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let h = self.spacing();
        let mut ijk = [0usize; 3];
        for d in 0..3 {
            ijk[d] = (((x[d] - self.lo[d]) / h[d]).floor() as usize).min(self.n[d] - 1);
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    /// Neighbour of `idx` across its upper face in direction `d`.
    pub fn upper_neighbour(&self, idx: usize, d: usize) -> Option<usize> {
        let mut ijk = self.ijk(idx);
        if ijk[d] + 1 >= self.n[d] {
            return None;
        }
        ijk[d] += 1;
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    fn axis_weights(&self, x: f64, d: usize) -> (usize, usize, f64, f64) {
        // Interpolation between cell centres; constant continuation in the
        // outer half cells. Returns (i0, i1, weight of i1, d weight/dx).
        let h = self.spacing()[d];
        let n = self.n[d];
        if n == 1 {
            return (0, 0, 0.0, 0.0);
        }
        let g = (x - self.lo[d]) / h - 0.5;
        let i0 = (g.floor().max(0.0) as usize).min(n - 2);
        let f = g - i0 as f64;
        if f <= 0.0 {
            (i0, i0 + 1, 0.0, if f == 0.0 { 1.0 / h } else { 0.0 })
        } else if f >= 1.0 {
            (i0, i0 + 1, 1.0, if f == 1.0 { 1.0 / h } else { 0.0 })
        } else {
            (i0, i0 + 1, f, 1.0 / h)
        }
    }

    /// Trilinear interpolation stencil from cell centres at `x`.
    pub fn stencil(&self, x: &Vec3) -> Stencil {
        let ax: [(usize, usize, f64, f64); 3] = [0, 1, 2].map(|d| self.axis_weights(x[d], d));
        let mut out = [(0usize, 0.0); 8];
        for c in 0..8 {
            let pick = |d: usize| if c >> d & 1 == 1 { (ax[d].1, ax[d].2) } else { (ax[d].0, 1.0 - ax[d].2) };
            let (i, wi) = pick(0);
            let (j, wj) = pick(1);
            let (k, wk) = pick(2);
            out[c] = (self.index(i, j, k), wi * wj * wk);
        }
        out
    }

    /// Gradient weights of the trilinear interpolant at `x`.
    pub fn gradient_stencil(&self, x: &Vec3) -> [(usize, Vec3); 8] {
        let ax: [(usize, usize, f64, f64); 3] = [0, 1, 2].map(|d| self.axis_weights(x[d], d));
        let mut out = [(0usize, Vec3::zeros()); 8];
        for c in 0..8 {
            let mut idx = [0usize; 3];
            let mut w = [0.0; 3];
            let mut dw = [0.0; 3];
            for d in 0..3 {
                if c >> d & 1 == 1 {
                    idx[d] = ax[d].1;
                    w[d] = ax[d].2;
                    dw[d] = ax[d].3;
                } else {
                    idx[d] = ax[d].0;
                    w[d] = 1.0 - ax[d].2;
                    dw[d] = -ax[d].3;
                }
            }
            out[c] = (
                self.index(idx[0], idx[1], idx[2]),
                Vec3::new(dw[0] * w[1] * w[2], w[0] * dw[1] * w[2], w[0] * w[1] * dw[2]),
            );
        }
        out
    }

    pub fn interpolate(&self, values: &[f64], x: &Vec3) -> f64 {
        self.stencil(x).iter().map(|(i, w)| w * values[*i]).sum()
    }

    pub fn interpolate_gradient(&self, values: &[f64], x: &Vec3) -> Vec3 {
        self.gradient_stencil(x).iter().map(|(i, w)| w * values[*i]).sum()
    }

    /// Samples `f` at cell centres.
    pub fn sample(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        (0..self.cell_count()).map(|i| f(&self.center(i))).collect()
    }

    /// Cell means of `f` by the two-point Gauss rule per axis.
    pub fn cell_means(&self, f: impl Fn(&Vec3) -> f64 + Sync) -> Vec<f64> {
        use rayon::prelude::*;
        let h = self.spacing();
        let g = 0.5 / 3f64.sqrt();
        (0..self.cell_count())
            .into_par_iter()
            .map(|idx| {
                let c = self.center(idx);
                let mut acc = 0.0;
                for a in [-g, g] {
                    for b in [-g, g] {
                        for e in [-g, g] {
                            acc += f(&(c + Vec3::new(a * h.x, b * h.y, e * h.z)));
                        }
                    }
                }
                acc / 8.0
            })
            .collect()
    }
}

/// Uniform nodes on `[0, 1]` carrying the curve unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n: usize,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("curve mesh needs at least 2 nodes, got {n}")));
        }
        Ok(Grid1D { n })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            1.0
        } else {
            k as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Length of the dual cell of node `k` (half cells at the ends).
    pub fn dual_length(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.n {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }
}

/// Cell-centred values with a time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkField {
    pub values: Vec<f64>,
    pub t: f64,
}

impl BulkField {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Assembly(format!("non-finite bulk value at cell {i}")));
        }
        Ok(BulkField { values, t })
    }
}
