use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccflow_core::approx::{energy_report, mass_drift, run_approx};
use ccflow_core::coefficients::{Coefficients, DeltaRule};
use ccflow_core::config::RunConfig;
use ccflow_core::geometry::{BuiltinCurve, CurveSource, Vec3};
use ccflow_core::harness::{
    capacity_integrand, ladder, run_capacity_ladder, run_constants_check, run_distance_suite, run_energy_ladder,
    run_gap_suite, run_gap_suite_arc, run_geometry_suite_for, run_limit_comparison, run_weak_residual_study,
    ConvergenceReport, GapSuite,
};
use ccflow_core::limit::{run_limit, xi_closure};
use ccflow_core::mesh::Grid3D;
use ccflow_core::output::{write_curve_series, write_limit_records, write_step_records, write_vtk};
use ccflow_core::Error;

#[derive(Parser)]
#[command(name = "ccflow", version, about = "Concentrated-capacity diffusion-advection around a moving curve")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set grid.n=48`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Built-in curve name.
    #[arg(long, global = true, conflicts_with = "curve_file")]
    curve: Option<String>,
    /// Polyline curve file with `t s x y z` rows.
    #[arg(long, global = true)]
    curve_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add the finest ladder rung.
    #[arg(long, global = true)]
    deep: bool,
    /// Write VTK snapshots.
    #[arg(long, global = true)]
    vtk: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Integrand {
    Const,
    Linear,
    Bump,
}

#[derive(Subcommand)]
enum Command {
    /// Chart identities against finite differences and numeric inverses.
    GeometryCheck,
    /// Distance, gap measure and exactness on constants.
    CoeffCheck,
    /// Capacity pairing along an epsilon ladder.
    CapacityLadder {
        #[arg(long = "f", value_enum, default_value = "const")]
        f: Integrand,
    },
    /// Run the approximating solver once.
    SolveApprox,
    /// Run the limit solver once.
    SolveLimit,
    /// Energy bounds along an epsilon ladder.
    EnergyLadder,
    /// Approximating solutions against the limit pair, plus the weak residual study.
    Compare,
    /// Print the version.
    Version,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Read { .. } => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn load_config(c: &Common) -> Outcome<RunConfig> {
    let mut cfg = RunConfig::load(c.config.as_deref(), &c.set)?;
    if let Some(name) = &c.curve {
        cfg.curve.name = name.clone();
        cfg.curve.spec = None;
        cfg.curve.polyline = None;
    }
    if let Some(path) = &c.curve_file {
        cfg.curve.polyline = Some(path.clone());
    }
    if let Some(out) = &c.out {
        cfg.output.dir = out.clone();
    }
    cfg.ladder.deep |= c.deep;
    cfg.output.vtk |= c.vtk;
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("CCFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("CCFLOW_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn geometry_check(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let source = cfg.curve.source()?;
    let rep = run_geometry_suite_for(&source, cfg.capacity.eps0, cfg.t_span(), cfg.checks.samples, cfg.checks.seed)?;
    Ok(vec![rep])
}

fn coeff_check(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let p = cfg.capacity_params()?;
    let mut out = vec![run_distance_suite(&p, 10 * cfg.checks.samples, cfg.checks.seed)];
    let first = 0.2 * (p.eps0 - p.eps);
    let gap = GapSuite {
        eps: p.eps,
        deltas: (0..4).map(|i| first / 2f64.powi(i)).collect(),
        t: cfg.t_span().0,
        density: cfg.quadrature,
        mc_samples: cfg.checks.mc_samples,
        seed: cfg.checks.seed,
    };
    let source = cfg.curve.source()?;
    out.push(match &source {
        CurveSource::Builtin(BuiltinCurve::Arc {
            center,
            radius,
            angular_velocity,
        }) if *angular_velocity == 0.0 => run_gap_suite_arc(Vec3::from(*center), *radius, p.eps0, &gap)?,
        _ => run_gap_suite(&source.chart(p.eps0, cfg.t_span())?, &gap, None)?,
    });
    out.push(run_constants_check(cfg.ladder.constants_grid)?);
    Ok(out)
}

fn capacity(cfg: &RunConfig, f: Integrand) -> Outcome<Vec<ConvergenceReport>> {
    let label = match f {
        Integrand::Const => "const",
        Integrand::Linear => "linear",
        Integrand::Bump => "bump",
    };
    let integrand = capacity_integrand(label).expect("known integrand");
    let chart = cfg.curve.source()?.chart(cfg.capacity.eps0, cfg.t_span())?;
    let grid = Grid3D::unit_cube(cfg.ladder.capacity_grid);
    let rep = run_capacity_ladder(
        label,
        &chart,
        &integrand,
        cfg.t_span().0,
        cfg.ladder.capacity_rungs,
        &grid,
        &cfg.quadrature,
    )?;
    Ok(vec![rep])
}

fn write_snapshots(dir: &Path, grid: &Grid3D, fields: &[ccflow_core::mesh::BulkField], prefix: &str) -> Outcome<()> {
    for (i, f) in fields.iter().enumerate() {
        write_vtk(&dir.join(format!("{prefix}-{i:04}.vtk")), grid, f, "u")?;
    }
    Ok(())
}

fn solve_approx(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let scenario = cfg.scenario()?;
    let chart = scenario.chart()?;
    let p = cfg.capacity_params()?;
    let coeffs = Coefficients::new(&chart, p, &cfg.material)?;
    let grid = Grid3D::unit_cube(cfg.grid.n);
    let traj = run_approx(&cfg.solve, &coeffs, &grid, &cfg.quadrature)?;
    let dir = &cfg.output.dir;
    write_step_records(&dir.join("approx-steps.csv"), &traj.records)?;
    if cfg.output.vtk {
        write_snapshots(dir, &grid, &traj.snapshots, "approx")?;
    }
    let e = energy_report(&traj);
    let drift = mass_drift(&traj);
    let mut rep = ConvergenceReport::new(
        "approximating solver",
        &["eps", "delta", "n", "steps", "mass_drift", "sup_energy", "dissipation", "initial_energy"],
    );
    rep.push_row(
        scenario.name,
        vec![
            p.eps,
            p.delta,
            cfg.grid.n as f64,
            (traj.records.len() - 1) as f64,
            drift,
            e.sup_energy,
            e.dissipation,
            e.initial_energy,
        ],
    );
    rep.check("mass conserved", drift <= 1e-8, format!("relative drift {drift:.3e}"));
    Ok(vec![rep])
}

fn solve_limit(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let scenario = cfg.scenario()?;
    let chart = scenario.chart()?;
    let grid = Grid3D::unit_cube(cfg.grid.n);
    let traj = run_limit(&cfg.solve, &cfg.limit, &chart, &cfg.material, &grid, &cfg.quadrature)?;
    let dir = &cfg.output.dir;
    write_limit_records(&dir.join("limit-steps.csv"), &traj.records)?;
    let series = traj
        .curve
        .iter()
        .map(|uc| Ok((uc.clone(), xi_closure(&chart, &cfg.material, &traj.mesh, uc)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    write_curve_series(&dir.join("curve.csv"), &traj.mesh, &series)?;
    if cfg.output.vtk {
        write_snapshots(dir, &grid, &traj.bulk, "limit")?;
    }
    let drift = traj.mass_drift();
    let last = traj.records.last().expect("initial record");
    let mut rep = ConvergenceReport::new(
        "limit solver",
        &["n", "n_s", "steps", "mass_drift", "bulk_mass", "line_mass"],
    );
    rep.push_row(
        scenario.name,
        vec![
            cfg.grid.n as f64,
            cfg.limit.n_s as f64,
            (traj.records.len() - 1) as f64,
            drift,
            last.bulk_mass,
            last.line_mass,
        ],
    );
    rep.check("combined mass conserved", drift <= 1e-8, format!("relative drift {drift:.3e}"));
    if traj.one_sided_velocity {
        rep.note("chart velocity used one-sided differences near the ends of the time span");
    }
    Ok(vec![rep])
}

fn energy(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let scenario = cfg.scenario()?;
    let rungs = ladder(cfg.capacity.eps0, &cfg.ladder.solver_grids(), DeltaRule::Eps11);
    Ok(vec![run_energy_ladder(&scenario, &rungs, cfg.ladder.control)?])
}

fn compare(cfg: &RunConfig) -> Outcome<Vec<ConvergenceReport>> {
    let scenario = cfg.scenario()?;
    let rungs = ladder(cfg.capacity.eps0, &cfg.ladder.solver_grids(), DeltaRule::Eps3);
    let cmp = run_limit_comparison(&scenario, &rungs)?;
    let weak = run_weak_residual_study(&scenario, &cfg.ladder.weak_grids, cfg.ladder.weak_dt_per_h)?;
    Ok(vec![cmp, weak])
}

fn write_reports(dir: &Path, reports: &[ConvergenceReport]) -> Outcome<()> {
    let text: String = reports.iter().map(ConvergenceReport::to_text).collect();
    let csv: String = reports
        .iter()
        .map(|r| format!("# {}\n{}", r.title, r.to_csv()))
        .collect::<Vec<_>>()
        .join("\n");
    let io = |e: std::io::Error| Failure::Runtime(format!("writing reports to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.txt"), text).map_err(io)?;
    std::fs::write(dir.join("report.csv"), csv).map_err(io)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome<bool> {
    if let Command::Version = cli.command {
        println!("ccflow {}", env!("CARGO_PKG_VERSION"));
        return Ok(true);
    }
    configure_threads()?;
    let cfg = load_config(&cli.common)?;
    let reports = match cli.command {
        Command::GeometryCheck => geometry_check(&cfg)?,
        Command::CoeffCheck => coeff_check(&cfg)?,
        Command::CapacityLadder { f } => capacity(&cfg, f)?,
        Command::SolveApprox => solve_approx(&cfg)?,
        Command::SolveLimit => solve_limit(&cfg)?,
        Command::EnergyLadder => energy(&cfg)?,
        Command::Compare => compare(&cfg)?,
        Command::Version => unreachable!(),
    };
    cfg.write_resolved(&cfg.output.dir)?;
    write_reports(&cfg.output.dir, &reports)?;
    for r in &reports {
        print!("{}", r.to_text());
    }
    Ok(reports.iter().all(ConvergenceReport::passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
