//! Solver campaigns along epsilon ladders.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{fmt_series, strictly_decreasing, ConvergenceReport};
use crate::approx::{energy_report, mass_drift, run_approx, run_approx_observed, SolveConfig};
use crate::coefficients::{CapacityParams, Coefficients, DeltaRule, MaterialParams, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::geometry::{builtin_chart, BuiltinCurve, CurveSource, TubeChart, Vec3};
use crate::limit::{xi_closure, CurveField, LimitConfig, LimitProblem, LimitTrajectory, TestFunction, WeakResidual};
use crate::mesh::{
    capacity_limit_target, capacity_pairing, disk_average_at, BulkField, Grid1D, Grid3D, PairingRoute, QuadDensity,
};

/// Curve, data and solver settings shared by a campaign.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub curve: CurveSource,
    pub eps0: f64,
    pub t_span: (f64, f64),
    pub material: MaterialParams,
    pub solve: SolveConfig,
    pub limit: LimitConfig,
    pub quad: QuadDensity,
}

impl Scenario {
    /// Segment translating across the cube in a swirling flow, with curve
    /// velocity slipping relative to the chart.
    pub fn moving_segment() -> Self {
        Scenario {
            name: "moving-segment".into(),
            curve: CurveSource::Builtin(BuiltinCurve::by_name("translating-segment").expect("builtin")),
            eps0: 0.2,
            t_span: (0.0, 1.0),
            material: MaterialParams {
                v: VectorField::Swirl {
                    center: [0.5; 3],
                    axis: [0.0, 0.0, 1.0],
                    rate: 0.5,
                },
                v_c: VectorField::constant([0.1, 0.3, 0.0]),
                u0: ScalarField::Bump {
                    base: 0.2,
                    amplitude: 1.0,
                    center: [0.4, 0.55, 0.45],
                    width: 0.2,
                },
                ..MaterialParams::unit()
            },
            solve: SolveConfig {
                dt: 2.5e-3,
                t_end: 0.05,
                snapshot_stride: 1000,
                ..SolveConfig::default()
            },
            limit: LimitConfig::default(),
            quad: QuadDensity::default(),
        }
    }

    /// Chart for solver campaigns: the curve must stay strictly inside the unit cube.
    pub fn chart(&self) -> Result<TubeChart> {
        let chart = self.curve.chart(self.eps0, self.t_span)?;
        chart.check_inside_box(&Vec3::zeros(), &Vec3::repeat(1.0), 32)?;
        Ok(chart)
    }
}

/// One ladder rung: core radius, collar width and grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
}

/// `eps0 / 2^i` on the given grids with `delta` from `rule`.
pub fn ladder(eps0: f64, grids: &[usize], rule: DeltaRule) -> Vec<Rung> {
    grids
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let eps = eps0 / 2f64.powi(i as i32 + 1);
            Rung {
                eps,
                delta: rule.delta(eps, 0.0),
                n,
            }
        })
        .collect()
}

/// Default solver ladder: 32, 64 and 96 cells per side, plus 192 when `deep`.
pub fn solver_grids(deep: bool) -> Vec<usize> {
    if deep {
        vec![32, 64, 96, 192]
    } else {
        vec![32, 64, 96]
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

fn integrand_one(_: &Vec3) -> f64 {
    1.0
}

fn integrand_linear(x: &Vec3) -> f64 {
    0.3 + x.x + 0.5 * x.y
}

fn integrand_bump(x: &Vec3) -> f64 {
    (-(x - Vec3::new(0.45, 0.5, 0.55)).norm_squared() / 0.08).exp()
}

/// Test integrands for the capacity ladder: `const`, `linear` or `bump`.
pub fn capacity_integrand(name: &str) -> Option<fn(&Vec3) -> f64> {
    match name {
        "const" | "one" => Some(integrand_one),
        "linear" => Some(integrand_linear),
        "bump" => Some(integrand_bump),
        _ => None,
    }
}

/// Pairing `int a_{eps,delta} f` against its limit `int f + pi eps0^2 int f(gamma) |gamma'|`
/// for `eps_i = eps0 / 2^i`, `delta_i = eps_i^3`, `i = 1..=rungs`.
pub fn run_capacity_ladder(
    label: &str,
    chart: &TubeChart,
    f: &(dyn Fn(&Vec3) -> f64 + Sync),
    t: f64,
    rungs: usize,
    grid: &Grid3D,
    quad: &QuadDensity,
) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let material = MaterialParams::unit();
    let eps0 = chart.eps0();
    let target = capacity_limit_target(grid, chart, f, t)?;
    let mut rep = ConvergenceReport::new(
        &format!("capacity ladder: {label}"),
        &["eps", "delta", "pairing", "target", "error"],
    );
    let mut errors = Vec::new();
    for r in ladder(eps0, &vec![grid.n[0]; rungs], DeltaRule::Eps3) {
        let p = CapacityParams::new(eps0, r.eps, r.delta)?;
        let c = Coefficients::new(chart, p, &material)?;
        let got = capacity_pairing(grid, &c, f, t, PairingRoute::Tube, quad)?;
        let err = if target != 0.0 {
            (got - target).abs() / target.abs()
        } else {
            (got - target).abs()
        };
        errors.push(err);
        rep.push_row(format!("eps={:.5}", r.eps), vec![r.eps, r.delta, got, target, err]);
    }
    let last = *errors.last().unwrap_or(&f64::NAN);
    if errors.iter().all(|e| *e == 0.0) {
        rep.check("error decreasing", true, "all errors vanish");
    } else {
        rep.check("error decreasing", strictly_decreasing(&errors), fmt_series(&errors));
    }
    rep.check("final error below 1e-3", last < 1e-3, format!("{last:.3e}"));
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Relative drift of `int a u` for the approximating solver at one rung.
pub fn run_conservation(scenario: &Scenario, eps: f64, n: usize, steps: usize) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let chart = scenario.chart()?;
    let cfg = SolveConfig {
        dt: scenario.solve.t_end / steps as f64,
        ..scenario.solve
    };
    let p = CapacityParams::with_rule(scenario.eps0, eps, cfg.delta_rule, cfg.delta)?;
    let c = Coefficients::new(&chart, p, &scenario.material)?;
    let grid = Grid3D::unit_cube(n);
    let traj = run_approx(&cfg, &c, &grid, &scenario.quad)?;
    let drift = mass_drift(&traj);
    let taken = traj.records.len() - 1;
    let mut rep = ConvergenceReport::new("approximating-solver conservation", &["steps", "mass0", "drift"]);
    rep.push_row(format!("n={n}"), vec![taken as f64, traj.records[0].mass, drift]);
    rep.check(
        "mass conserved",
        drift < 1e-8 && taken >= steps,
        format!("relative drift {drift:.3e} over {taken} steps on {n}^3"),
    );
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Normalized energy pair per rung; non-blow-up means no rung exceeds three
/// times the first. With `control`, each rung is repeated with `delta` close
/// to `eps` and the outcome reported for information.
pub fn run_energy_ladder(scenario: &Scenario, rungs: &[Rung], control: bool) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let chart = scenario.chart()?;
    let mut rep = ConvergenceReport::new(
        &format!("energy ladder: {}", scenario.name),
        &["eps", "delta", "n", "sup_energy", "dissipation", "initial"],
    );
    let mut pairs = Vec::new();
    let mut ctrl = Vec::new();
    for r in rungs {
        let run = |delta: f64| -> Result<(f64, f64, f64)> {
            let p = CapacityParams::new(scenario.eps0, r.eps, delta)?;
            let c = Coefficients::new(&chart, p, &scenario.material)?;
            let traj = run_approx(&scenario.solve, &c, &Grid3D::unit_cube(r.n), &scenario.quad)?;
            let e = energy_report(&traj);
            let (a, b) = e.normalized();
            Ok((a, b, e.initial_energy))
        };
        let (a, b, init) = run(r.delta)?;
        rep.push_row(format!("eps={:.4}", r.eps), vec![r.eps, r.delta, r.n as f64, a, b, init]);
        pairs.push((a, b));
        if control {
            let delta = r.eps.min(0.99 * (scenario.eps0 - r.eps));
            let (ca, cb, cinit) = run(delta)?;
            rep.push_row(format!("control eps={:.4}", r.eps), vec![r.eps, delta, r.n as f64, ca, cb, cinit]);
            ctrl.push((ca, cb));
        }
    }
    let bound = |v: &[(f64, f64)]| {
        let (a0, b0) = v[0];
        v.iter().all(|(a, b)| *a <= 3.0 * a0 && *b <= 3.0 * b0)
    };
    let constant = pairs.iter().fold(0.0f64, |m, (a, b)| m.max(*a).max(*b));
    if pairs.iter().all(|p| *p == (0.0, 0.0)) {
        rep.check("energy non-blow-up", true, "zero data: all energies vanish");
    } else {
        rep.check(
            "energy non-blow-up",
            bound(&pairs),
            format!("no rung above 3x the first; recorded constant {constant:.4}"),
        );
    }
    if control && !ctrl.is_empty() {
        let uniform = bound(&ctrl);
        rep.inform(
            "negative control (delta ~ eps)",
            !uniform,
            if uniform {
                "energies still look uniform without the delta rule".to_string()
            } else {
                "energies grow without the delta rule".to_string()
            },
        );
    }
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Constants with zero velocities on a static curve are fixed points of both
/// solvers; the closure vanishes for curves transported by their own motion.
pub fn run_constants_check(n: usize) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let mut rep = ConvergenceReport::new("exactness on constants", &["max deviation"]);
    let value = 1.7;
    let curve = BuiltinCurve::Segment {
        origin: [0.2, 0.5, 0.5],
        direction: [0.6, 0.0, 0.0],
        normal_hint: [0.0, 1.0, 0.0],
    };
    let chart = builtin_chart(curve, 0.2, (0.0, 1.0))?;
    let m = MaterialParams {
        u0: ScalarField::constant(value),
        k_s: ScalarField::constant(2.0),
        ..MaterialParams::unit()
    };
    let cfg = SolveConfig {
        dt: 0.01,
        t_end: 0.05,
        ..SolveConfig::default()
    };
    let grid = Grid3D::unit_cube(n);
    let quad = QuadDensity::default();
    let p = CapacityParams::new(0.2, 0.05, 1e-3)?;
    let c = Coefficients::new(&chart, p, &m)?;
    let traj = run_approx(&cfg, &c, &grid, &quad)?;
    let dev_a = traj
        .snapshots
        .iter()
        .flat_map(|s| s.values.iter())
        .map(|v| (v - value).abs())
        .fold(0.0, f64::max);
    let lim = LimitProblem {
        chart: &chart,
        material: &m,
        grid: &grid,
        mesh: Grid1D::new(33)?,
        config: LimitConfig::default(),
        quad,
    }
    .run(&cfg)?;
    let dev_l = lim
        .bulk
        .iter()
        .flat_map(|s| s.values.iter())
        .chain(lim.curve.iter().flat_map(|c| c.values.iter()))
        .map(|v| (v - value).abs())
        .fold(0.0, f64::max);
    rep.push_row("approximating solver", vec![dev_a]);
    rep.push_row("limit solver", vec![dev_l]);

    // Closure with v_C equal to the chart velocity of the curve.
    let mut xi_max: f64 = 0.0;
    let transported = [
        (
            BuiltinCurve::by_name("translating-segment").expect("builtin"),
            VectorField::constant([0.0, 0.2, 0.0]),
        ),
        (
            BuiltinCurve::Arc {
                center: [0.5, 0.5, 0.5],
                radius: 0.3,
                angular_velocity: 1.5,
            },
            VectorField::Swirl {
                center: [0.5, 0.5, 0.5],
                axis: [0.0, 0.0, 1.0],
                rate: 1.5,
            },
        ),
    ];
    let mesh = Grid1D::new(33)?;
    for (curve, v_c) in transported {
        let chart = builtin_chart(curve, 0.1, (0.0, 1.0))?;
        let m = MaterialParams {
            v_c,
            ..MaterialParams::unit()
        };
        for t in [0.1, 0.5, 0.9] {
            let uc = CurveField::new(mesh.nodes().iter().map(|s| 1.0 + s).collect(), t)?;
            let xi = xi_closure(&chart, &m, &mesh, &uc)?;
            xi_max = xi.nu.iter().chain(&xi.omega).fold(xi_max, |a, v| a.max(v.abs()));
        }
    }
    rep.push_row("closure with v_C = d_t F", vec![xi_max]);
    rep.check("approximating solver keeps constants", dev_a <= 1e-10, format!("{dev_a:.3e}"));
    rep.check("limit solver keeps constants", dev_l <= 1e-10, format!("{dev_l:.3e}"));
    rep.check("closure vanishes for transported curves", xi_max <= 1e-8, format!("{xi_max:.3e}"));
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Disk averages (value and transverse gradient) of a bulk field along the curve nodes.
fn disk_profile(
    chart: &TubeChart,
    grid: &Grid3D,
    u: &BulkField,
    mesh: &Grid1D,
    radius: f64,
    quad: &QuadDensity,
) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    let mut vals = Vec::with_capacity(mesh.n);
    let mut grads = Vec::with_capacity(mesh.n);
    for s in mesh.nodes() {
        let jet = chart.jet(u.t, s)?;
        let d = disk_average_at(grid, &u.values, &jet, radius, quad)?;
        vals.push(d.value);
        grads.push([d.grad[1], d.grad[2]]);
    }
    Ok((vals, grads))
}

fn weak_basket<'a>(
    chart: &'a TubeChart,
    m: &'a MaterialParams,
    grid: &'a Grid3D,
    mesh: Grid1D,
    t0: f64,
    horizon: f64,
) -> Result<Vec<WeakResidual<'a>>> {
    TestFunction::basket()
        .into_iter()
        .map(|f| WeakResidual::new(chart, m, grid, mesh, f, t0, horizon))
        .collect()
}

/// Per-rung observables of the comparison campaign.
#[derive(Debug, Clone)]
pub struct RungTrace {
    pub rung: Rung,
    /// Disk averages at the curve nodes, one row per time level.
    pub averages: Vec<Vec<f64>>,
    pub xi_error: f64,
    pub weak: Vec<f64>,
    pub final_bulk: BulkField,
    pub seconds: f64,
}

fn trace_rung(scenario: &Scenario, chart: &TubeChart, rung: Rung, mesh: Grid1D) -> Result<RungTrace> {
    let start = Instant::now();
    let m = &scenario.material;
    let p = CapacityParams::new(scenario.eps0, rung.eps, rung.delta)?;
    let c = Coefficients::new(chart, p, m)?;
    let grid = Grid3D::unit_cube(rung.n);
    let t0 = chart.t_span().0;
    let horizon = t0 + scenario.solve.steps() as f64 * scenario.solve.dt;
    let mut weak = weak_basket(chart, m, &grid, mesh, t0, horizon)?;
    let mut averages = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    let traj = run_approx_observed(&scenario.solve, &c, &grid, &scenario.quad, &mut |v| {
        let (vals, grads) = disk_profile(chart, &grid, v.field, &mesh, rung.eps, &scenario.quad)?;
        let uc = CurveField::new(vals.clone(), v.field.t)?;
        if v.step > 0 {
            let xi = xi_closure(chart, m, &mesh, &uc)?;
            for k in 1..mesh.n - 1 {
                num += (grads[k][0] - xi.nu[k]).powi(2) + (grads[k][1] - xi.omega[k]).powi(2);
                den += xi.nu[k].powi(2) + xi.omega[k].powi(2);
            }
            for w in weak.iter_mut() {
                w.add_step(v.field, &uc)?;
            }
        }
        averages.push(vals);
        Ok(())
    })?;
    Ok(RungTrace {
        rung,
        averages,
        xi_error: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
        weak: weak.iter().map(WeakResidual::value).collect(),
        final_bulk: traj.snapshots.last().cloned().expect("final snapshot"),
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn limit_run(scenario: &Scenario, chart: &TubeChart, grid: &Grid3D, config: LimitConfig) -> Result<LimitTrajectory> {
    LimitProblem {
        chart,
        material: &scenario.material,
        grid,
        mesh: Grid1D::new(config.n_s)?,
        config,
        quad: scenario.quad,
    }
    .run(&scenario.solve)
}

/// Bulk distance outside the tube `N_eps0` at the final time, with the
/// reference interpolated to the rung grid.
fn outside_distance(chart: &TubeChart, u: &BulkField, rgrid: &Grid3D, reference: &BulkField, grid: &Grid3D) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..grid.cell_count() {
        let x = grid.center(i);
        if chart.invert_chart(u.t, &x)?.is_some() {
            continue;
        }
        let r = rgrid.interpolate(&reference.values, &x);
        num += (u.values[i] - r).powi(2);
        den += r * r;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Approximating solutions along the ladder against each other and against
/// the limit solver on the finest rung's grid.
pub fn run_limit_comparison(scenario: &Scenario, rungs: &[Rung]) -> Result<ConvergenceReport> {
    let start = Instant::now();
    if rungs.len() < 3 {
        return Err(Error::InvalidParams(format!("comparison needs at least 3 rungs, got {}", rungs.len())));
    }
    let chart = scenario.chart()?;
    let mesh = Grid1D::new(scenario.limit.n_s)?;
    let finest = Grid3D::unit_cube(rungs.last().map(|r| r.n).unwrap_or(32));
    let reference = limit_run(scenario, &chart, &finest, scenario.limit)?;
    let uncoupled = limit_run(
        scenario,
        &chart,
        &Grid3D::unit_cube(rungs[0].n),
        LimitConfig {
            lambda_ex: Some(0.0),
            ..scenario.limit
        },
    )?;
    let ref_curve: Vec<Vec<f64>> = reference.curve.iter().map(|c| c.values.clone()).collect();
    let unc_curve: Vec<Vec<f64>> = uncoupled.curve.iter().map(|c| c.values.clone()).collect();
    let ref_bulk = reference.bulk.last().expect("final limit state");

    let mut traces = Vec::new();
    for &r in rungs {
        traces.push(trace_rung(scenario, &chart, r, mesh)?);
    }
    let mut rep = ConvergenceReport::new(
        &format!("approximating vs limit: {}", scenario.name),
        &[
            "eps",
            "n",
            "cauchy",
            "dist_uC",
            "dist_uC_uncoupled",
            "dist_bulk_outside",
            "xi_rel",
            "weak_max",
            "seconds",
        ],
    );
    let mut cauchy = Vec::new();
    let mut dist = Vec::new();
    let mut dist_unc = Vec::new();
    let mut xi = Vec::new();
    for (i, tr) in traces.iter().enumerate() {
        let flat = flatten(&tr.averages);
        let c = if i > 0 {
            rel_l2(&flatten(&traces[i - 1].averages), &flat)
        } else {
            f64::NAN
        };
        if i > 0 {
            cauchy.push(c);
        }
        let d = rel_l2(&flat, &flatten(&ref_curve));
        let du = rel_l2(&flat, &flatten(&unc_curve));
        let grid = Grid3D::unit_cube(tr.rung.n);
        let db = outside_distance(&chart, &tr.final_bulk, &finest, ref_bulk, &grid)?;
        let weak_max = tr.weak.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        dist.push(d);
        dist_unc.push(du);
        xi.push(tr.xi_error);
        rep.push_row(
            format!("eps={:.4}", tr.rung.eps),
            vec![tr.rung.eps, tr.rung.n as f64, c, d, du, db, tr.xi_error, weak_max, tr.seconds],
        );
    }
    rep.check("cauchy differences decrease", strictly_decreasing(&cauchy), fmt_series(&cauchy));
    rep.check("distance to limit curve field decreases", strictly_decreasing(&dist), fmt_series(&dist));
    rep.check("transverse gradient approaches closure", strictly_decreasing(&xi), fmt_series(&xi));
    rep.inform(
        "distance to uncoupled curve field decreases",
        strictly_decreasing(&dist_unc),
        fmt_series(&dist_unc),
    );
    rep.note(format!(
        "limit reference on {}^3 with exchange rate {:.4e}; uncoupled reference uses zero exchange",
        finest.n[0],
        scenario.limit.lambda(&finest, scenario.material.k0)
    ));
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Weak residual of limit-solver trajectories for the test basket at
/// resolutions `ns` with `dt` proportional to the grid spacing.
pub fn run_weak_residual_study(scenario: &Scenario, ns: &[usize], dt_per_h: f64) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let chart = scenario.chart()?;
    let names: Vec<String> = TestFunction::basket().iter().map(|f| f.name.clone()).collect();
    let mut cols: Vec<&str> = vec!["n", "dt"];
    cols.extend(names.iter().map(|s| s.as_str()));
    let mut rep = ConvergenceReport::new(&format!("weak residual: {}", scenario.name), &cols);
    let mut per_res = Vec::new();
    for &n in ns {
        let grid = Grid3D::unit_cube(n);
        let cfg = SolveConfig {
            dt: dt_per_h / n as f64,
            ..scenario.solve
        };
        let limit = LimitConfig {
            n_s: n + 1,
            ..scenario.limit
        };
        let problem = LimitProblem {
            chart: &chart,
            material: &scenario.material,
            grid: &grid,
            mesh: Grid1D::new(limit.n_s)?,
            config: limit,
            quad: scenario.quad,
        };
        let t0 = chart.t_span().0;
        let horizon = t0 + cfg.steps() as f64 * cfg.dt;
        let mut weak = weak_basket(&chart, &scenario.material, &grid, problem.mesh, t0, horizon)?;
        problem.run_observed(&cfg, &mut |v| {
            if v.step > 0 {
                for w in weak.iter_mut() {
                    w.add_step(v.bulk, v.curve)?;
                }
            }
            Ok(())
        })?;
        let vals: Vec<f64> = weak.iter().map(|w| w.value()).collect();
        let mut row = vec![n as f64, cfg.dt];
        row.extend(vals.iter().copied());
        rep.push_row(format!("n={n}"), row);
        per_res.push(vals);
    }
    for (j, name) in names.iter().enumerate() {
        let series: Vec<f64> = per_res.iter().map(|v| v[j].abs()).collect();
        let factors: Vec<f64> = series.windows(2).map(|w| w[0] / w[1]).collect();
        let ok = factors.iter().all(|f| *f >= 1.5);
        rep.check(
            &format!("residual decrease {name}"),
            ok,
            format!("|R| = {}, factors {}", fmt_series(&series), fmt_series(&factors)),
        );
    }
    rep.seconds = start.elapsed().as_secs_f64();
    Ok(rep)
}
