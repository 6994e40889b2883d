//! Verification campaigns and their reports.

mod ladders;
mod report;
mod suites;

pub use ladders::{
    capacity_integrand, ladder, run_capacity_ladder, run_conservation, run_constants_check, run_energy_ladder,
    run_limit_comparison, run_weak_residual_study, solver_grids, Rung, RungTrace, Scenario,
};
pub use report::{fmt_series, strictly_decreasing, ConvergenceReport, Verdict};
pub use suites::{
    arc_inverse, brute_force_core_distance, gap_monte_carlo, run_distance_suite, run_gap_suite, run_gap_suite_arc,
    run_geometry_suite, run_geometry_suite_for, GapSuite, MonteCarloBox, ALGEBRAIC_TOL, DERIVATIVE_TOL,
};

#[cfg(test)]
mod tests;
