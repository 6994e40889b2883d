//! Backward-Euler finite-volume solver for `d_t(a u) - div(K grad u) + div(u v) = 0`
//! with zero total flux through the boundary of the box.
//!
//! Coefficients enter as cell means (`a`, diagonal of `K`, tube part of `v`)
//! obtained from tube quadrature, so the collar need not be resolved by the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficients, DeltaRule};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linsolve::{bicgstab, CsrMatrix, SolveStats, SolverOptions};
use crate::mesh::{BulkField, CellCoefficients, Grid3D, QuadDensity};

/// Time stepping and linear solver settings shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_rule: DeltaRule,
    /// Collar width used when `delta_rule = "explicit"`.
    pub delta: f64,
    /// Keep every `snapshot_stride`-th state (the last one is always kept).
    pub snapshot_stride: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            dt: 2.5e-4,
            t_end: 0.05,
            tol: 1e-12,
            max_iter: 5000,
            delta_rule: DeltaRule::Eps3,
            delta: 1e-3,
            snapshot_stride: 10,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidParams(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::InvalidParams(format!("tolerance must lie in (0, 1e-4], got {}", self.tol)));
        }
        if self.max_iter == 0 || self.snapshot_stride == 0 {
            return Err(Error::InvalidParams("max_iter and snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// One backward-Euler step `M u_new = rhs`.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub a_new: Vec<f64>,
}

/// Face velocities `v . e_d` on interior faces, one vector per direction,
/// indexed by the lower cell.
fn face_velocity(
    grid: &Grid3D,
    base_v: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    cells: &CellCoefficients,
    lower: usize,
    upper: usize,
    d: usize,
) -> f64 {
    let h = grid.spacing();
    let mut xf = grid.center(lower);
    xf[d] += 0.5 * h[d];
    base_v(&xf)[d] + 0.5 * (cells.velocity_tube_part(lower)[d] + cells.velocity_tube_part(upper)[d])
}

/// Flux part of the step operator: two-point diffusion with harmonic-mean
/// face diffusivity and first-order upwind advection. Every column sums to zero.
pub fn flux_triplets(
    grid: &Grid3D,
    cells: &CellCoefficients,
    base_v: &(dyn Fn(&Vec3) -> Vec3 + Sync),
) -> Vec<(usize, usize, f64)> {
    let h = grid.spacing();
    (0..grid.cell_count())
        .into_par_iter()
        .flat_map_iter(|lo| {
            let mut out = Vec::with_capacity(12);
            for d in 0..3 {
                let Some(up) = grid.upper_neighbour(lo, d) else {
                    continue;
                };
                let area = grid.face_area(d);
                let kl = cells.k_diag(lo)[d];
                let ku = cells.k_diag(up)[d];
                let t = area / h[d] * 2.0 * kl * ku / (kl + ku);
                let vn = face_velocity(grid, base_v, cells, lo, up, d);
                let out_w = area * vn.max(0.0);
                let in_w = area * (-vn).max(0.0);
                out.extend([
                    (lo, lo, t + out_w),
                    (lo, up, -t - in_w),
                    (up, up, t + in_w),
                    (up, lo, -t - out_w),
                ]);
            }
            out
        })
        .collect()
}

/// Assembles `(a_new V / dt) u_new + flux(u_new) = (a_old V / dt) u_old`.
pub fn assemble_step(
    grid: &Grid3D,
    coeffs: &Coefficients,
    u_old: &BulkField,
    cells_old: &CellCoefficients,
    cells_new: &CellCoefficients,
    dt: f64,
) -> Result<StepSystem> {
    let n = grid.cell_count();
    if u_old.values.len() != n {
        return Err(Error::Assembly(format!(
            "field has {} values for {n} cells",
            u_old.values.len()
        )));
    }
    let t_new = cells_new.t;
    let v = |x: &Vec3| coeffs.material.v.eval(t_new, x);
    let mut trip = flux_triplets(grid, cells_new, &v);
    let vol = grid.cell_volume();
    let a_new = cells_new.a_values();
    let a_old = cells_old.a_values();
    trip.extend((0..n).map(|i| (i, i, a_new[i] * vol / dt)));
    let rhs: Vec<f64> = (0..n).map(|i| a_old[i] * vol / dt * u_old.values[i]).collect();
    let matrix = CsrMatrix::from_triplets(n, trip);
    if !matrix.all_finite() || rhs.iter().any(|r| !r.is_finite()) {
        return Err(Error::Assembly("non-finite coefficient in step system".into()));
    }
    Ok(StepSystem { matrix, rhs, a_new })
}

/// Solves a step system with the previous state as initial guess.
pub fn linear_solve(system: &StepSystem, guess: &BulkField, t: f64, opts: &SolverOptions) -> Result<(BulkField, SolveStats)> {
    let mut x = guess.values.clone();
    let stats = bicgstab(&system.matrix, &system.rhs, &mut x, opts)?;
    Ok((BulkField::new(x, t)?, stats))
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `int a u dx`.
    pub mass: f64,
    /// `int a u^2 dx`.
    pub energy: f64,
    /// `int a |grad u|^2 dx` at this time.
    pub gradient_energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid3D,
    pub dt: f64,
    pub snapshots: Vec<BulkField>,
    pub records: Vec<StepRecord>,
}

/// Cell gradients by central differences (one-sided next to the boundary).
pub fn cell_gradients(grid: &Grid3D, u: &[f64]) -> Vec<Vec3> {
    let h = grid.spacing();
    (0..grid.cell_count())
        .into_par_iter()
        .map(|idx| {
            let ijk = grid.ijk(idx);
            let mut g = Vec3::zeros();
            for d in 0..3 {
                let step = |delta: isize| {
                    let mut c = ijk;
                    c[d] = (c[d] as isize + delta) as usize;
                    grid.index(c[0], c[1], c[2])
                };
                let has_lo = ijk[d] > 0;
                let has_hi = ijk[d] + 1 < grid.n[d];
                g[d] = match (has_lo, has_hi) {
                    (true, true) => (u[step(1)] - u[step(-1)]) / (2.0 * h[d]),
                    (false, true) => (u[step(1)] - u[idx]) / h[d],
                    (true, false) => (u[idx] - u[step(-1)]) / h[d],
                    (false, false) => 0.0,
                };
            }
            g
        })
        .collect()
}

fn record(grid: &Grid3D, step: usize, u: &BulkField, a: &[f64], stats: Option<&SolveStats>) -> StepRecord {
    let vol = grid.cell_volume();
    let grads = cell_gradients(grid, &u.values);
    let (mut mass, mut energy, mut genergy) = (0.0, 0.0, 0.0);
    for i in 0..u.values.len() {
        mass += a[i] * u.values[i];
        energy += a[i] * u.values[i] * u.values[i];
        genergy += a[i] * grads[i].norm_squared();
    }
    StepRecord {
        step,
        t: u.t,
        mass: mass * vol,
        energy: energy * vol,
        gradient_energy: genergy * vol,
        iterations: stats.map_or(0, |s| s.iterations),
        residual: stats.map_or(0.0, |s| s.residual),
        min: u.values.iter().copied().fold(f64::INFINITY, f64::min),
        max: u.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// State handed to a run observer after each step (and once for `t0`).
pub struct StepView<'a> {
    pub step: usize,
    pub field: &'a BulkField,
    pub cells: &'a CellCoefficients,
    pub record: &'a StepRecord,
}

/// Time-steps the approximating problem from `u0` (cell means) over
/// `[t0, t0 + t_end]`, calling `observe` after every step.
pub fn run_approx_observed(
    config: &SolveConfig,
    coeffs: &Coefficients,
    grid: &Grid3D,
    quad: &QuadDensity,
    observe: &mut dyn FnMut(&StepView) -> Result<()>,
) -> Result<Trajectory> {
    config.validate()?;
    let t0 = coeffs.chart.t_span().0;
    let steps = config.steps();
    let mut cells = CellCoefficients::build(grid, coeffs, t0, quad)?;
    let u0 = grid.cell_means(|x| coeffs.material.u0.eval(t0, x));
    let mut u = BulkField::new(u0, t0)?;
    let mut rec = record(grid, 0, &u, &cells.a_values(), None);
    observe(&StepView {
        step: 0,
        field: &u,
        cells: &cells,
        record: &rec,
    })?;
    let mut traj = Trajectory {
        grid: grid.clone(),
        dt: config.dt,
        snapshots: vec![u.clone()],
        records: vec![rec],
    };
    let opts = config.solver_options();
    for n in 1..=steps {
        let t_new = t0 + n as f64 * config.dt;
        let cells_new = CellCoefficients::build(grid, coeffs, t_new, quad)?;
        let system = assemble_step(grid, coeffs, &u, &cells, &cells_new, config.dt)?;
        let (u_new, stats) = linear_solve(&system, &u, t_new, &opts)?;
        rec = record(grid, n, &u_new, &system.a_new, Some(&stats));
        u = u_new;
        cells = cells_new;
        observe(&StepView {
            step: n,
            field: &u,
            cells: &cells,
            record: &rec,
        })?;
        traj.records.push(rec);
        if n % config.snapshot_stride == 0 || n == steps {
            traj.snapshots.push(u.clone());
        }
    }
    Ok(traj)
}

pub fn run_approx(config: &SolveConfig, coeffs: &Coefficients, grid: &Grid3D, quad: &QuadDensity) -> Result<Trajectory> {
    run_approx_observed(config, coeffs, grid, quad, &mut |_| Ok(()))
}

/// Energy quantities of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `max_t int a u^2 dx`.
    pub sup_energy: f64,
    /// `sum_n dt int a |grad u|^2 dx`.
    pub dissipation: f64,
    /// `int a(0) u0^2 dx`.
    pub initial_energy: f64,
}

impl EnergyReport {
    /// Both quantities divided by the initial energy (zero when it vanishes).
    pub fn normalized(&self) -> (f64, f64) {
        if self.initial_energy > 0.0 {
            (self.sup_energy / self.initial_energy, self.dissipation / self.initial_energy)
        } else {
            (0.0, 0.0)
        }
    }
}

pub fn energy_report(traj: &Trajectory) -> EnergyReport {
    let initial = traj.records.first().map_or(0.0, |r| r.energy);
    EnergyReport {
        sup_energy: traj.records.iter().map(|r| r.energy).fold(0.0, f64::max),
        dissipation: traj.records.iter().skip(1).map(|r| traj.dt * r.gradient_energy).sum(),
        initial_energy: initial,
    }
}

/// Largest relative drift of `int a u dx` from its initial value.
pub fn mass_drift(traj: &Trajectory) -> f64 {
    let m0 = traj.records[0].mass;
    let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
    traj.records.iter().map(|r| (r.mass - m0).abs() / scale).fold(0.0, f64::max)
}
