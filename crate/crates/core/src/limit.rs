//! Coupled bulk/curve solver for the concentrated-capacity limit and the
//! weak-residual evaluator.
//!
//! The bulk field carries `d_t u - div(k0 grad u - u v) = -pi eps0^2 q delta_Gamma`
//! and the curve field carries
//! `d_t(u_C |g'|) + d_s J = q |g'|` with
//! `J = -(k_s / |g'|) d_s u_C + u_C t . (v_C - d_t F)` and `J = 0` at both ends.
//! The exchange `q = lambda (disk mean of u - u_C)` uses the same disk weights
//! for averaging and for spreading, so bulk and line exchange cancel exactly.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{flux_triplets, SolveConfig};
use crate::coefficients::MaterialParams;
use crate::error::{Error, Result};
use crate::geometry::{TubeChart, Vec3};
use crate::linsolve::{bicgstab, CsrMatrix, SolveStats};
use crate::mesh::{composite_gauss, disk_weights, gauss_on, BulkField, CellCoefficients, Grid1D, Grid3D, QuadDensity};

/// Curve unknowns at the nodes of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurveField {
    pub values: Vec<f64>,
    pub t: f64,
}

impl CurveField {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Assembly(format!("non-finite curve value at node {i}")));
        }
        Ok(CurveField { values, t })
    }

    /// Piecewise-linear interpolation and slope at `s`.
    pub fn eval(&self, mesh: &Grid1D, s: f64) -> (f64, f64) {
        let h = mesh.spacing();
        let k = ((s / h).floor().max(0.0) as usize).min(mesh.n - 2);
        let u = (s - mesh.node(k)) / h;
        let (a, b) = (self.values[k], self.values[k + 1]);
        (a + u * (b - a), (b - a) / h)
    }
}

/// Transverse gradient closure at the curve nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct XiPair {
    pub nu: Vec<f64>,
    pub omega: Vec<f64>,
}

/// `e_{2,3} . grad F^{-1} (v_C - d_t F)` at `(t, s, 0, 0)` divided by `k_n(s, 0, 0)`;
/// multiply by `u_C` to obtain `(xi_nu, xi_omega)`.
pub fn xi_coefficients(chart: &TubeChart, m: &MaterialParams, t: f64, s: f64) -> Result<(f64, f64)> {
    let jet = chart.jet(t, s)?;
    let motion = chart.motion(t, s)?;
    let rel = jet.inv_grad_f(0.0, 0.0)? * (m.v_c.eval(t, &jet.gamma) - motion.chart_velocity(0.0, 0.0));
    let kn = m.k_n.eval(t, &Vec3::new(s, 0.0, 0.0));
    if !(kn >= m.theta && kn > 0.0) {
        return Err(Error::InvalidParams(format!("k_n = {kn} at s = {s} is below the floor {}", m.theta)));
    }
    Ok((rel[1] / kn, rel[2] / kn))
}

pub fn xi_closure(chart: &TubeChart, m: &MaterialParams, mesh: &Grid1D, uc: &CurveField) -> Result<XiPair> {
    let mut out = XiPair {
        nu: Vec::with_capacity(mesh.n),
        omega: Vec::with_capacity(mesh.n),
    };
    for (k, s) in mesh.nodes().into_iter().enumerate() {
        let (a, b) = xi_coefficients(chart, m, uc.t, s)?;
        out.nu.push(a * uc.values[k]);
        out.omega.push(b * uc.values[k]);
    }
    Ok(out)
}

/// Limit-solver settings on top of [`SolveConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    /// Curve mesh nodes.
    pub n_s: usize,
    /// Exchange rate; `None` selects `k0 / r_avg^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ex: Option<f64>,
    /// Averaging disk radius in grid cells.
    pub r_avg_cells: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            n_s: 65,
            lambda_ex: None,
            r_avg_cells: 2.0,
        }
    }
}

impl LimitConfig {
    pub fn r_avg(&self, grid: &Grid3D) -> f64 {
        self.r_avg_cells * grid.spacing().min()
    }

    pub fn lambda(&self, grid: &Grid3D, k0: f64) -> f64 {
        self.lambda_ex.unwrap_or_else(|| k0 / self.r_avg(grid).powi(2))
    }
}

/// Geometry of the curve mesh at one time.
#[derive(Debug, Clone)]
pub struct CurveGeometry {
    pub t: f64,
    /// `dual_length * |d_s gamma|` at each node.
    pub lengths: Vec<f64>,
    /// `k_s / |d_s gamma|` at element midpoints.
    pub conductance: Vec<f64>,
    /// `t . (v_C - d_t F)` at element midpoints.
    pub drift: Vec<f64>,
    /// Disk weights of each node.
    pub weights: Vec<Vec<(usize, f64)>>,
    pub one_sided: bool,
}

impl CurveGeometry {
    pub fn build(
        chart: &TubeChart,
        m: &MaterialParams,
        grid: &Grid3D,
        mesh: &Grid1D,
        r_avg: f64,
        t: f64,
        quad: &QuadDensity,
    ) -> Result<Self> {
        let nodes = mesh.nodes();
        let per_node: Vec<Result<(f64, Vec<(usize, f64)>)>> = nodes
            .par_iter()
            .enumerate()
            .map(|(k, &s)| {
                let jet = chart.jet(t, s)?;
                let w = disk_weights(grid, &jet, r_avg, quad)?;
                Ok((mesh.dual_length(k) * jet.speed(), w))
            })
            .collect();
        let mut lengths = Vec::with_capacity(mesh.n);
        let mut weights = Vec::with_capacity(mesh.n);
        for r in per_node {
            let (l, w) = r?;
            lengths.push(l);
            weights.push(w);
        }
        let mut conductance = Vec::with_capacity(mesh.n - 1);
        let mut drift = Vec::with_capacity(mesh.n - 1);
        let mut one_sided = false;
        for k in 0..mesh.n - 1 {
            let s = 0.5 * (nodes[k] + nodes[k + 1]);
            let jet = chart.jet(t, s)?;
            let motion = chart.motion(t, s)?;
            one_sided |= motion.one_sided;
            let speed = jet.speed();
            conductance.push(m.k_s.eval(t, &Vec3::new(s, 0.0, 0.0)) / speed);
            let rel = m.v_c.eval(t, &jet.gamma) - motion.chart_velocity(0.0, 0.0);
            drift.push(jet.frame.t_vec.dot(&rel));
        }
        Ok(CurveGeometry {
            t,
            lengths,
            conductance,
            drift,
            weights,
            one_sided,
        })
    }
}

/// Per-step record of the coupled run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRecord {
    pub step: usize,
    pub t: f64,
    /// `int u dx`.
    pub bulk_mass: f64,
    /// `pi eps0^2 sum u_C |d_s gamma| ds`.
    pub line_mass: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl LimitRecord {
    pub fn total_mass(&self) -> f64 {
        self.bulk_mass + self.line_mass
    }
}

#[derive(Debug, Clone)]
pub struct LimitTrajectory {
    pub grid: Grid3D,
    pub mesh: Grid1D,
    pub dt: f64,
    pub bulk: Vec<BulkField>,
    pub curve: Vec<CurveField>,
    pub records: Vec<LimitRecord>,
    pub one_sided_velocity: bool,
}

impl LimitTrajectory {
    /// Largest relative drift of the combined mass.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records[0].total_mass();
        let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
        self.records
            .iter()
            .map(|r| (r.total_mass() - m0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Everything needed to advance the coupled system.
pub struct LimitProblem<'a> {
    pub chart: &'a TubeChart,
    pub material: &'a MaterialParams,
    pub grid: &'a Grid3D,
    pub mesh: Grid1D,
    pub config: LimitConfig,
    pub quad: QuadDensity,
}

/// State handed to the observer after each step (and once at `t0`).
pub struct LimitView<'a> {
    pub step: usize,
    pub bulk: &'a BulkField,
    pub curve: &'a CurveField,
    pub geometry: &'a CurveGeometry,
}

impl<'a> LimitProblem<'a> {
    fn line_factor(&self) -> f64 {
        std::f64::consts::PI * self.chart.eps0().powi(2)
    }

    pub fn geometry(&self, t: f64) -> Result<CurveGeometry> {
        CurveGeometry::build(
            self.chart,
            self.material,
            self.grid,
            &self.mesh,
            self.config.r_avg(self.grid),
            t,
            &self.quad,
        )
    }

    /// Coupled backward-Euler system for the step ending at `geo_new.t`.
    pub fn assemble(
        &self,
        u_old: &BulkField,
        c_old: &CurveField,
        geo_old: &CurveGeometry,
        geo_new: &CurveGeometry,
        dt: f64,
    ) -> Result<(CsrMatrix, Vec<f64>)> {
        let grid = self.grid;
        let nb = grid.cell_count();
        let ns = self.mesh.n;
        let t = geo_new.t;
        let vol = grid.cell_volume();
        let pe = self.line_factor();
        let lambda = self.config.lambda(grid, self.material.k0);
        let cells = CellCoefficients::empty(grid, self.material.k0, t);
        let v = |x: &Vec3| self.material.v.eval(t, x);
        let mut trip = flux_triplets(grid, &cells, &v);
        trip.extend((0..nb).map(|i| (i, i, vol / dt)));
        let mut rhs: Vec<f64> = u_old.values.iter().map(|u| u * vol / dt).collect();

        let h = self.mesh.spacing();
        for k in 0..ns {
            let row = nb + k;
            let l = geo_new.lengths[k];
            trip.push((row, row, pe * l / dt));
            rhs.push(pe * geo_old.lengths[k] * c_old.values[k] / dt);
            if lambda != 0.0 {
                let w = &geo_new.weights[k];
                // curve row: - pe lambda L (sum_j w_j u_j - c_k)
                trip.push((row, row, pe * lambda * l));
                for &(j, wj) in w {
                    trip.push((row, j, -pe * lambda * l * wj));
                }
                // bulk rows: + pe lambda L w_i (sum_j w_j u_j - c_k)
                for &(i, wi) in w {
                    trip.push((i, row, -pe * lambda * l * wi));
                    for &(j, wj) in w {
                        trip.push((i, j, pe * lambda * l * wi * wj));
                    }
                }
            }
        }
        for e in 0..ns - 1 {
            let (a, b) = (nb + e, nb + e + 1);
            let d = pe * geo_new.conductance[e] / h;
            let vp = pe * geo_new.drift[e].max(0.0);
            let vm = pe * (-geo_new.drift[e]).max(0.0);
            trip.extend([(a, a, d + vp), (a, b, -d - vm), (b, b, d + vm), (b, a, -d - vp)]);
        }
        let m = CsrMatrix::from_triplets(nb + ns, trip);
        if !m.all_finite() || rhs.iter().any(|r| !r.is_finite()) {
            return Err(Error::Assembly("non-finite entry in the coupled system".into()));
        }
        Ok((m, rhs))
    }

    fn record(&self, step: usize, u: &BulkField, c: &CurveField, geo: &CurveGeometry, stats: Option<&SolveStats>) -> LimitRecord {
        LimitRecord {
            step,
            t: u.t,
            bulk_mass: u.values.iter().sum::<f64>() * self.grid.cell_volume(),
            line_mass: self.line_factor() * c.values.iter().zip(&geo.lengths).map(|(a, b)| a * b).sum::<f64>(),
            iterations: stats.map_or(0, |s| s.iterations),
            residual: stats.map_or(0.0, |s| s.residual),
        }
    }

    pub fn run_observed(
        &self,
        config: &SolveConfig,
        observe: &mut dyn FnMut(&LimitView) -> Result<()>,
    ) -> Result<LimitTrajectory> {
        config.validate()?;
        let t0 = self.chart.t_span().0;
        let steps = config.steps();
        let u0 = self.grid.cell_means(|x| self.material.u0.eval(t0, x));
        let mut u = BulkField::new(u0, t0)?;
        let c0: Vec<f64> = self
            .mesh
            .nodes()
            .iter()
            .map(|&s| Ok(self.material.u0.eval(t0, &self.chart.eval_curve(t0, s)?)))
            .collect::<Result<_>>()?;
        let mut c = CurveField::new(c0, t0)?;
        let mut geo = self.geometry(t0)?;
        observe(&LimitView {
            step: 0,
            bulk: &u,
            curve: &c,
            geometry: &geo,
        })?;
        let mut traj = LimitTrajectory {
            grid: self.grid.clone(),
            mesh: self.mesh,
            dt: config.dt,
            bulk: vec![u.clone()],
            curve: vec![c.clone()],
            records: vec![self.record(0, &u, &c, &geo, None)],
            one_sided_velocity: geo.one_sided,
        };
        let nb = self.grid.cell_count();
        let opts = config.solver_options();
        for n in 1..=steps {
            let t = t0 + n as f64 * config.dt;
            let geo_new = self.geometry(t)?;
            let (m, rhs) = self.assemble(&u, &c, &geo, &geo_new, config.dt)?;
            let mut x: Vec<f64> = u.values.iter().chain(&c.values).copied().collect();
            let stats = bicgstab(&m, &rhs, &mut x, &opts)?;
            let cv = x.split_off(nb);
            u = BulkField::new(x, t)?;
            c = CurveField::new(cv, t)?;
            geo = geo_new;
            traj.one_sided_velocity |= geo.one_sided;
            observe(&LimitView {
                step: n,
                bulk: &u,
                curve: &c,
                geometry: &geo,
            })?;
            traj.records.push(self.record(n, &u, &c, &geo, Some(&stats)));
            traj.curve.push(c.clone());
            if n % config.snapshot_stride == 0 || n == steps {
                traj.bulk.push(u.clone());
            }
        }
        Ok(traj)
    }

    pub fn run(&self, config: &SolveConfig) -> Result<LimitTrajectory> {
        self.run_observed(config, &mut |_| Ok(()))
    }
}

/// Convenience wrapper around [`LimitProblem::run`].
pub fn run_limit(
    config: &SolveConfig,
    limit: &LimitConfig,
    chart: &TubeChart,
    material: &MaterialParams,
    grid: &Grid3D,
    quad: &QuadDensity,
) -> Result<LimitTrajectory> {
    LimitProblem {
        chart,
        material,
        grid,
        mesh: Grid1D::new(limit.n_s)?,
        config: *limit,
        quad: *quad,
    }
    .run(config)
}

/// Spatial part `psi` of a separable test function `(1 - (t - t0)/(h - t0))^2 psi(x)`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub psi: Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    pub fn new(
        name: &str,
        psi: impl Fn(&Vec3) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.to_string(),
            psi: Arc::new(psi),
            grad: Arc::new(grad),
        }
    }

    pub fn constant(value: f64) -> Self {
        TestFunction::new("constant", move |_| value, |_| Vec3::zeros())
    }

    /// Five smooth spatial profiles centred on the unit cube.
    pub fn basket() -> Vec<TestFunction> {
        use std::f64::consts::PI;
        let c = Vec3::new(0.5, 0.5, 0.5);
        let w2 = 2.0 * 0.2 * 0.2;
        vec![
            TestFunction::new(
                "cos-x-cos-y",
                |x| (PI * x.x).cos() * (PI * x.y).cos(),
                |x| {
                    Vec3::new(
                        -PI * (PI * x.x).sin() * (PI * x.y).cos(),
                        -PI * (PI * x.x).cos() * (PI * x.y).sin(),
                        0.0,
                    )
                },
            ),
            TestFunction::new(
                "gauss-bump",
                move |x| (-(x - c).norm_squared() / w2).exp(),
                move |x| -2.0 / w2 * (x - c) * (-(x - c).norm_squared() / w2).exp(),
            ),
            TestFunction::new(
                "quadratic",
                |x| x.x * x.y + x.z * x.z,
                |x| Vec3::new(x.y, x.x, 2.0 * x.z),
            ),
            TestFunction::new(
                "wave-y",
                |x| (2.0 * PI * x.y).cos() * (1.0 + x.x),
                |x| {
                    Vec3::new(
                        (2.0 * PI * x.y).cos(),
                        -2.0 * PI * (2.0 * PI * x.y).sin() * (1.0 + x.x),
                        0.0,
                    )
                },
            ),
            TestFunction::new(
                "sin-xz",
                |x| (PI * x.x).sin() * (PI * x.z).sin(),
                |x| {
                    Vec3::new(
                        PI * (PI * x.x).cos() * (PI * x.z).sin(),
                        0.0,
                        PI * (PI * x.x).sin() * (PI * x.z).cos(),
                    )
                },
            ),
        ]
    }
}

/// Incremental evaluation of the weak identity for a piecewise-constant-in-time
/// discrete pair.
///
/// Volume terms pair cell values with cell means of `psi`; gradient terms pair
/// two-point face differences with differences of `psi` averaged over the
/// cell mid-planes; advection uses the upwind face value. The curve field is
/// piecewise linear in `s` and integrated by Gauss rules on each element.
pub struct WeakResidual<'a> {
    chart: &'a TubeChart,
    material: &'a MaterialParams,
    grid: &'a Grid3D,
    mesh: Grid1D,
    test: TestFunction,
    t0: f64,
    horizon: f64,
    psi_means: Vec<f64>,
    plane_means: [Vec<f64>; 3],
    volume: f64,
    line: f64,
    last_t: f64,
}

impl<'a> WeakResidual<'a> {
    pub fn new(
        chart: &'a TubeChart,
        material: &'a MaterialParams,
        grid: &'a Grid3D,
        mesh: Grid1D,
        test: TestFunction,
        t0: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > t0) {
            return Err(Error::InvalidParams(format!("test horizon {horizon} must exceed t0 = {t0}")));
        }
        let psi = test.psi.clone();
        let psi_means = grid.cell_means(|x| psi(x));
        let h = grid.spacing();
        let g = gauss_on(-0.5, 0.5, 3);
        let plane_means = [0usize, 1, 2].map(|d| {
            let (a, b) = ((d + 1) % 3, (d + 2) % 3);
            (0..grid.cell_count())
                .into_par_iter()
                .map(|idx| {
                    let c = grid.center(idx);
                    let mut acc = 0.0;
                    for &(p, wp) in &g {
                        for &(q, wq) in &g {
                            let mut x = c;
                            x[a] += p * h[a];
                            x[b] += q * h[b];
                            acc += wp * wq * psi(&x);
                        }
                    }
                    acc
                })
                .collect()
        });
        let mut wr = WeakResidual {
            chart,
            material,
            grid,
            mesh,
            test,
            t0,
            horizon,
            psi_means,
            plane_means,
            volume: 0.0,
            line: 0.0,
            last_t: t0,
        };
        wr.add_initial()?;
        Ok(wr)
    }

    fn theta(&self, t: f64) -> f64 {
        let r = 1.0 - (t - self.t0) / (self.horizon - self.t0);
        r * r
    }

    /// `int_a^b theta dt`, exact for the quadratic time profile.
    fn theta_integral(&self, a: f64, b: f64) -> f64 {
        let len = self.horizon - self.t0;
        let prim = |t: f64| -len * (1.0 - (t - self.t0) / len).powi(3) / 3.0;
        prim(b) - prim(a)
    }

    fn line_factor(&self) -> f64 {
        std::f64::consts::PI * self.chart.eps0().powi(2)
    }

    fn add_initial(&mut self) -> Result<()> {
        let t = self.t0;
        let m = self.material;
        let psi = self.test.psi.clone();
        let th = self.theta(t);
        self.volume -= th * crate::mesh::domain_integral(self.grid, |x| psi(x) * m.u0.eval(t, x));
        let mut line = 0.0;
        for (s, w) in composite_gauss(0.0, 1.0, self.mesh.n - 1, 3) {
            let jet = self.chart.jet(t, s)?;
            line += w * psi(&jet.gamma) * m.u0.eval(t, &jet.gamma) * jet.speed();
        }
        self.line -= self.line_factor() * th * line;
        Ok(())
    }

    /// Adds the contribution of the interval `(last_t, t]` on which the pair
    /// takes the values `(u, uc)`.
    pub fn add_step(&mut self, u: &BulkField, uc: &CurveField) -> Result<()> {
        let (ta, tb) = (self.last_t, u.t);
        let dtheta = self.theta(tb) - self.theta(ta);
        let theta_int = self.theta_integral(ta, tb);
        let grid = self.grid;
        let vol = grid.cell_volume();
        let h = grid.spacing();
        let k0 = self.material.k0;
        let m = self.material;

        // - int phi_t u
        let pair: f64 = self.psi_means.iter().zip(&u.values).map(|(p, v)| p * v).sum::<f64>() * vol;
        let mut vol_terms = -dtheta * pair;
        // + int grad phi . k0 grad u - int u grad phi . v
        let faces: f64 = (0..grid.cell_count())
            .into_par_iter()
            .map(|lo| {
                let mut acc = 0.0;
                for d in 0..3 {
                    let Some(up) = grid.upper_neighbour(lo, d) else {
                        continue;
                    };
                    let area = grid.face_area(d);
                    let dpsi = self.plane_means[d][up] - self.plane_means[d][lo];
                    let du = u.values[up] - u.values[lo];
                    acc += k0 * du / h[d] * area * dpsi;
                    let mut xf = grid.center(lo);
                    xf[d] += 0.5 * h[d];
                    let vn = m.v.eval(tb, &xf)[d];
                    let upwind = if vn >= 0.0 { u.values[lo] } else { u.values[up] };
                    acc -= upwind * vn * area * dpsi;
                }
                acc
            })
            .sum();
        vol_terms += theta_int * faces;
        self.volume += vol_terms;

        // line block
        let line = self.line_block(uc, tb, dtheta, theta_int)?;
        self.line += self.line_factor() * line;
        self.last_t = tb;
        Ok(())
    }

    fn line_block(&self, uc: &CurveField, t: f64, dtheta: f64, theta_int: f64) -> Result<f64> {
        let m = self.material;
        let mut acc = 0.0;
        for (s, w) in composite_gauss(0.0, 1.0, self.mesh.n - 1, 3) {
            let jet = self.chart.jet(t, s)?;
            let motion = self.chart.motion(t, s)?;
            let g = jet.grad_f(0.0, 0.0);
            let inv = jet.inv_grad_f(0.0, 0.0)?;
            let speed = jet.speed();
            let x = jet.gamma;
            let psi = (self.test.psi)(&x);
            let grad_amb = (self.test.grad)(&x);
            // gradient of the test function in (s, nu, omega), per unit theta
            let grad_tube = g.transpose() * grad_amb;
            let w_chart = motion.chart_velocity(0.0, 0.0);
            let (val, slope) = uc.eval(&self.mesh, s);
            let (xn, xw) = xi_coefficients(self.chart, m, t, s)?;
            let y = Vec3::new(s, 0.0, 0.0);
            let ks = m.k_s.eval(t, &y);
            let kn = m.k_n.eval(t, &y);
            // phi_t in tube coordinates minus grad phi . grad F^{-1} d_t F
            let phi_t_tube = dtheta * psi + theta_int * grad_amb.dot(&w_chart);
            let transport = theta_int * grad_tube.dot(&(inv * w_chart));
            let mut term = -(phi_t_tube - transport) * val * speed;
            term -= theta_int * grad_tube.dot(&(inv * m.v_c.eval(t, &x))) * val * speed;
            let flux = Vec3::new(ks / (speed * speed) * slope, kn * xn * val, kn * xw * val);
            term += theta_int * grad_tube.dot(&flux) * speed;
            acc += w * term;
        }
        Ok(acc)
    }

    pub fn volume_block(&self) -> f64 {
        self.volume
    }

    pub fn line_block_total(&self) -> f64 {
        self.line
    }

    pub fn value(&self) -> f64 {
        self.volume + self.line
    }
}

/// Weak residual of stored trajectories (every time level must be present).
#[allow(clippy::too_many_arguments)]
pub fn weak_residual(
    chart: &TubeChart,
    material: &MaterialParams,
    grid: &Grid3D,
    mesh: Grid1D,
    bulk: &[BulkField],
    curve: &[CurveField],
    test: &TestFunction,
) -> Result<f64> {
    if bulk.len() != curve.len() || bulk.len() < 2 {
        return Err(Error::InvalidParams(
            "weak residual needs matching bulk and curve states at every time level".into(),
        ));
    }
    let t0 = bulk[0].t;
    let horizon = bulk.last().unwrap().t;
    let mut wr = WeakResidual::new(chart, material, grid, mesh, test.clone(), t0, horizon)?;
    for (u, c) in bulk.iter().zip(curve).skip(1) {
        wr.add_step(u, c)?;
    }
    Ok(wr.value())
}

#[cfg(test)]
mod tests;
