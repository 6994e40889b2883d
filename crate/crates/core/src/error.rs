use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by geometry evaluation, coefficient assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible range [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate curve at (t = {t}, s = {s}): |d_s gamma| = {speed:e}")]
    DegenerateCurve { t: f64, s: f64, speed: f64 },

    #[error("chart invalid at (t = {t}, s = {s}, nu = {nu}, omega = {omega}): {reason}")]
    ChartValidity {
        reason: String,
        t: f64,
        s: f64,
        nu: f64,
        omega: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("linear solver did not converge in {iterations} iterations (final relative residual {final_residual:e})")]
    Solver {
        iterations: usize,
        final_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("point {point:?} lies outside the computational box")]
    OutsideGrid { point: [f64; 3] },

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    // Small slack so that endpoints computed in floating point are accepted.
    let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    if value.is_finite() && value >= lo - slack && value <= hi + slack {
        Ok(())
    } else {
        Err(Error::Domain { what, value, lo, hi })
    }
}
