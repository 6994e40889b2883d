//! Moving curve, its orthonormal frame, and the tube chart
//! `F(t, s, nu, omega) = gamma(t, s) + nu n(t, s) + omega b(t, s)`.
//!
//! Derivatives of the frame in `s` and of the chart in `t` are taken by
//! centered five-point finite differences; everything else (Jacobian
//! determinant, metric inverse, inverse Jacobian) is evaluated in closed form
//! from those derivatives.

mod curves;
mod rmf;
mod spline;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

pub use curves::{BuiltinCurve, CurvePath, PolylineCurve};
pub use spline::NaturalSpline;

use crate::error::{check_range, Error, Result};
use rmf::RmfTable;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Positively oriented orthonormal triple attached to the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t_vec: Vec3,
    pub n_vec: Vec3,
    pub b_vec: Vec3,
}

/// Worst deviations of a frame from the SO(3) conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDefects {
    pub max_dot: f64,
    pub max_norm_error: f64,
    pub det_error: f64,
}

impl Frame {
    pub fn new(t_vec: Vec3, n_vec: Vec3, b_vec: Vec3) -> Self {
        Frame { t_vec, n_vec, b_vec }
    }

    /// Matrix with columns `(t, n, b)`.
    pub fn matrix(&self) -> Mat3 {
        Mat3::from_columns(&[self.t_vec, self.n_vec, self.b_vec])
    }

    pub fn defects(&self) -> FrameDefects {
        let dots = [
            self.t_vec.dot(&self.n_vec),
            self.t_vec.dot(&self.b_vec),
            self.n_vec.dot(&self.b_vec),
        ];
        let norms = [self.t_vec.norm(), self.n_vec.norm(), self.b_vec.norm()];
        FrameDefects {
            max_dot: dots.iter().fold(0.0_f64, |m, d| m.max(d.abs())),
            max_norm_error: norms.iter().fold(0.0_f64, |m, n| m.max((n - 1.0).abs())),
            det_error: (self.matrix().determinant() - 1.0).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameMode {
    /// Use the closed-form frame supplied by the curve.
    Analytic,
    /// Propagate a twist-free frame along `s` from `s = -eps0`.
    RotationMinimizing,
}

/// Numerical knobs of the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartOptions {
    /// Step for `s`-derivatives, relative to the length of `[-eps0, 1 + eps0]`.
    pub s_step_rel: f64,
    /// Step for `t`-derivatives, relative to the length of the time interval.
    pub t_step_rel: f64,
    pub rmf_intervals: usize,
    pub rmf_seed: Vec3,
    /// Number of presampled curve points used to seed chart inversion.
    pub inversion_samples: usize,
    pub newton_max_iter: usize,
    /// Lattice density of the construction-time validity check.
    pub validation_density: usize,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            s_step_rel: 1e-5,
            t_step_rel: 1e-5,
            rmf_intervals: 4096,
            rmf_seed: Vec3::y(),
            inversion_samples: 512,
            newton_max_iter: 50,
            validation_density: 16,
        }
    }
}

/// Tube coordinates `(s, nu, omega)` of an ambient point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeCoords {
    pub s: f64,
    pub nu: f64,
    pub omega: f64,
}

impl TubeCoords {
    pub fn radius(&self) -> f64 {
        self.nu.hypot(self.omega)
    }
}

/// `d_t F` at a chart point; `one_sided` is set when the time derivative had
/// to use a one-sided stencil at an end of the time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveVelocity {
    pub value: Vec3,
    pub one_sided: bool,
}

/// Curve data at a fixed `(t, s)`: everything the chart needs to evaluate
/// `F`, `grad F` and its closed-form companions for any `(nu, omega)`.
#[derive(Debug, Clone, Copy)]
pub struct SliceJet {
    pub t: f64,
    pub s: f64,
    pub gamma: Vec3,
    pub dgamma: Vec3,
    pub frame: Frame,
    pub dn: Vec3,
    pub db: Vec3,
}

impl SliceJet {
    pub fn point(&self, nu: f64, omega: f64) -> Vec3 {
        self.gamma + nu * self.frame.n_vec + omega * self.frame.b_vec
    }

    /// `d_s gamma + nu d_s n + omega d_s b`.
    pub fn first_column(&self, nu: f64, omega: f64) -> Vec3 {
        self.dgamma + nu * self.dn + omega * self.db
    }

    /// `<d_s b, n>`.
    pub fn twist_b(&self) -> f64 {
        self.db.dot(&self.frame.n_vec)
    }

    /// `<d_s n, b>`.
    pub fn twist_n(&self) -> f64 {
        self.dn.dot(&self.frame.b_vec)
    }

    pub fn speed(&self) -> f64 {
        self.dgamma.norm()
    }

    pub fn grad_f(&self, nu: f64, omega: f64) -> Mat3 {
        Mat3::from_columns(&[self.first_column(nu, omega), self.frame.n_vec, self.frame.b_vec])
    }

    fn chart_error(&self, nu: f64, omega: f64, reason: impl Into<String>) -> Error {
        Error::ChartValidity {
            reason: reason.into(),
            t: self.t,
            s: self.s,
            nu,
            omega,
        }
    }

    /// `det(grad F^T grad F) = |c|^2 - nu^2 <d_s n, b>^2 - omega^2 <d_s b, n>^2`.
    fn gram_determinant(&self, nu: f64, omega: f64) -> f64 {
        let c = self.first_column(nu, omega);
        c.norm_squared() - (nu * self.twist_n()).powi(2) - (omega * self.twist_b()).powi(2)
    }

    /// Closed-form Jacobian determinant `J_F`.
    pub fn det_jf(&self, nu: f64, omega: f64) -> Result<f64> {
        let radicand = self.gram_determinant(nu, omega);
        if !(radicand > 0.0) {
            return Err(self.chart_error(nu, omega, format!("nonpositive Jacobian radicand {radicand:e}")));
        }
        Ok(radicand.sqrt())
    }

    /// Closed-form `(grad F^T grad F)^{-1}`.
    pub fn metric_inv(&self, nu: f64, omega: f64) -> Result<Mat3> {
        let det = self.gram_determinant(nu, omega);
        if !(det > 0.0) {
            return Err(self.chart_error(nu, omega, format!("singular metric, determinant {det:e}")));
        }
        let a = self.first_column(nu, omega).norm_squared();
        let wb = omega * self.twist_b();
        let vg = nu * self.twist_n();
        let adj = Mat3::new(
            1.0,
            -wb,
            -vg,
            -wb,
            a - vg * vg,
            vg * wb,
            -vg,
            vg * wb,
            a - wb * wb,
        );
        Ok(adj / det)
    }

    /// Closed-form `grad F^{-1} = (grad F^T grad F)^{-1} grad F^T`.
    pub fn inv_grad_f(&self, nu: f64, omega: f64) -> Result<Mat3> {
        Ok(self.metric_inv(nu, omega)? * self.grad_f(nu, omega).transpose())
    }
}

/// Time derivatives of the curve data at fixed `(t, s)`.
#[derive(Debug, Clone, Copy)]
pub struct SliceMotion {
    pub dgamma_dt: Vec3,
    pub dn_dt: Vec3,
    pub db_dt: Vec3,
    pub one_sided: bool,
}

impl SliceMotion {
    pub fn chart_velocity(&self, nu: f64, omega: f64) -> Vec3 {
        self.dgamma_dt + nu * self.dn_dt + omega * self.db_dt
    }
}

#[derive(Debug)]
struct TimeSlice {
    rmf: Option<RmfTable>,
    samples: Vec<(f64, Vec3)>,
}

/// The moving tubular neighbourhood of a curve.
pub struct TubeChart {
    curve: Arc<dyn CurvePath>,
    eps0: f64,
    t_span: (f64, f64),
    mode: FrameMode,
    opts: ChartOptions,
    cache: Mutex<HashMap<u64, Arc<TimeSlice>>>,
}

impl std::fmt::Debug for TubeChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TubeChart")
            .field("curve", &self.curve)
            .field("eps0", &self.eps0)
            .field("t_span", &self.t_span)
            .field("mode", &self.mode)
            .finish()
    }
}

const MAX_CACHED_SLICES: usize = 256;

impl TubeChart {
    /// Builds a chart and checks `J_F > 0` on a lattice over
    /// `[t0, t1] x [-eps0, 1 + eps0] x D_eps0`.
    pub fn new(curve: Arc<dyn CurvePath>, eps0: f64, t_span: (f64, f64), mode: FrameMode) -> Result<Self> {
        Self::with_options(curve, eps0, t_span, mode, ChartOptions::default())
    }

    pub fn with_options(
        curve: Arc<dyn CurvePath>,
        eps0: f64,
        t_span: (f64, f64),
        mode: FrameMode,
        opts: ChartOptions,
    ) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::InvalidParams(format!("eps0 must be positive, got {eps0}")));
        }
        if !(t_span.1 >= t_span.0) {
            return Err(Error::InvalidParams(format!("empty time interval {t_span:?}")));
        }
        if mode == FrameMode::Analytic && curve.analytic_frame(t_span.0, 0.5).is_none() {
            return Err(Error::InvalidParams(
                "analytic frame mode requested but the curve has no closed-form frame".into(),
            ));
        }
        let chart = TubeChart {
            curve,
            eps0,
            t_span,
            mode,
            opts,
            cache: Mutex::new(HashMap::new()),
        };
        chart.validate_lattice(chart.opts.validation_density)?;
        Ok(chart)
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    pub fn frame_mode(&self) -> FrameMode {
        self.mode
    }

    pub fn curve(&self) -> &Arc<dyn CurvePath> {
        &self.curve
    }

    pub fn s_range(&self) -> (f64, f64) {
        (-self.eps0, 1.0 + self.eps0)
    }

    fn s_step(&self) -> f64 {
        self.opts.s_step_rel * (1.0 + 2.0 * self.eps0)
    }

    fn t_step(&self) -> f64 {
        let len = self.t_span.1 - self.t_span.0;
        self.opts.t_step_rel * if len > 0.0 { len } else { 1.0 }
    }

    fn check_ts(&self, t: f64, s: f64) -> Result<()> {
        check_range("t", t, self.t_span.0, self.t_span.1)?;
        check_range("s", s, -self.eps0, 1.0 + self.eps0)
    }

    fn check_point(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<()> {
        self.check_ts(t, s)?;
        check_range("sqrt(nu^2 + omega^2)", nu.hypot(omega), 0.0, self.eps0)
    }

    fn slice(&self, t: f64) -> Arc<TimeSlice> {
        let key = t.to_bits();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let pad = 0.05 * (1.0 + 2.0 * self.eps0);
        let rmf = (self.mode == FrameMode::RotationMinimizing).then(|| {
            RmfTable::build(
                self.curve.as_ref(),
                t,
                -self.eps0 - pad,
                1.0 + self.eps0 + pad,
                self.opts.rmf_intervals,
                &self.opts.rmf_seed,
            )
        });
        let m = self.opts.inversion_samples.max(2);
        let samples = (0..m)
            .map(|i| {
                let s = -self.eps0 + (1.0 + 2.0 * self.eps0) * i as f64 / (m - 1) as f64;
                (s, self.curve.position(t, s))
            })
            .collect();
        let slice = Arc::new(TimeSlice { rmf, samples });
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= MAX_CACHED_SLICES {
            cache.clear();
        }
        cache.insert(key, slice.clone());
        slice
    }

    fn frame_raw(&self, t: f64, s: f64) -> Result<Frame> {
        let tangent = self.curve.tangent(t, s);
        let speed = tangent.norm();
        if !(speed > 1e-10) {
            return Err(Error::DegenerateCurve { t, s, speed });
        }
        match self.mode {
            FrameMode::Analytic => Ok(self.curve.analytic_frame(t, s).expect("checked at construction")),
            FrameMode::RotationMinimizing => {
                let slice = self.slice(t);
                Ok(slice.rmf.as_ref().expect("rmf table").frame(&(tangent / speed), s))
            }
        }
    }

    /// `gamma(t, s)`.
    pub fn eval_curve(&self, t: f64, s: f64) -> Result<Vec3> {
        self.check_ts(t, s)?;
        Ok(self.curve.position(t, s))
    }

    /// Frame `(t, n, b)` at `(t, s)`.
    pub fn eval_frame(&self, t: f64, s: f64) -> Result<Frame> {
        self.check_ts(t, s)?;
        self.frame_raw(t, s)
    }

    pub(crate) fn jet_unchecked(&self, t: f64, s: f64) -> Result<SliceJet> {
        let frame = self.frame_raw(t, s)?;
        let h = self.s_step();
        let mut frames = [frame; 4];
        for (slot, off) in frames.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
            *slot = self.frame_raw(t, s + off * h)?;
        }
        let d = |sel: fn(&Frame) -> Vec3| {
            (sel(&frames[0]) - 8.0 * sel(&frames[1]) + 8.0 * sel(&frames[2]) - sel(&frames[3])) / (12.0 * h)
        };
        Ok(SliceJet {
            t,
            s,
            gamma: self.curve.position(t, s),
            dgamma: self.curve.tangent(t, s),
            frame,
            dn: d(|f| f.n_vec),
            db: d(|f| f.b_vec),
        })
    }

    /// Curve data needed to evaluate the chart at any `(nu, omega)` for this `(t, s)`.
    pub fn jet(&self, t: f64, s: f64) -> Result<SliceJet> {
        self.check_ts(t, s)?;
        self.jet_unchecked(t, s)
    }

    pub(crate) fn motion_unchecked(&self, t: f64, s: f64) -> Result<SliceMotion> {
        let tau = self.t_step();
        let (t0, t1) = self.t_span;
        let sample = |tt: f64| -> Result<[Vec3; 3]> {
            let f = self.frame_raw(tt, s)?;
            Ok([self.curve.position(tt, s), f.n_vec, f.b_vec])
        };
        let combine = |vals: &[[Vec3; 3]], w: &[f64], scale: f64| -> [Vec3; 3] {
            let mut out = [Vec3::zeros(); 3];
            for (v, wi) in vals.iter().zip(w) {
                for k in 0..3 {
                    out[k] += *wi * v[k];
                }
            }
            out.map(|v| v / scale)
        };
        let (d, one_sided) = if t1 - t0 < 4.0 * tau {
            // Degenerate (static) interval: any stencil is one-sided relative to it.
            let vals = [sample(t - tau)?, sample(t + tau)?];
            (combine(&vals, &[-1.0, 1.0], 2.0 * tau), true)
        } else if t - 2.0 * tau >= t0 && t + 2.0 * tau <= t1 {
            let vals = [sample(t - 2.0 * tau)?, sample(t - tau)?, sample(t + tau)?, sample(t + 2.0 * tau)?];
            (combine(&vals, &[1.0, -8.0, 8.0, -1.0], 12.0 * tau), false)
        } else if t - 2.0 * tau < t0 {
            let vals = [sample(t)?, sample(t + tau)?, sample(t + 2.0 * tau)?];
            (combine(&vals, &[-3.0, 4.0, -1.0], 2.0 * tau), true)
        } else {
            let vals = [sample(t)?, sample(t - tau)?, sample(t - 2.0 * tau)?];
            (combine(&vals, &[3.0, -4.0, 1.0], 2.0 * tau), true)
        };
        Ok(SliceMotion {
            dgamma_dt: d[0],
            dn_dt: d[1],
            db_dt: d[2],
            one_sided,
        })
    }

    pub fn motion(&self, t: f64, s: f64) -> Result<SliceMotion> {
        self.check_ts(t, s)?;
        self.motion_unchecked(t, s)
    }

    /// `F(t, s, nu, omega)`.
    pub fn map(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Vec3> {
        self.check_point(t, s, nu, omega)?;
        Ok(self.curve.position(t, s) + {
            let f = self.frame_raw(t, s)?;
            nu * f.n_vec + omega * f.b_vec
        })
    }

    pub fn grad_f(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Mat3> {
        self.check_point(t, s, nu, omega)?;
        Ok(self.jet_unchecked(t, s)?.grad_f(nu, omega))
    }

    pub fn det_jf(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<f64> {
        self.check_point(t, s, nu, omega)?;
        self.jet_unchecked(t, s)?.det_jf(nu, omega)
    }

    pub fn inv_grad_f(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Mat3> {
        self.check_point(t, s, nu, omega)?;
        self.jet_unchecked(t, s)?.inv_grad_f(nu, omega)
    }

    pub fn metric_inv(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Mat3> {
        self.check_point(t, s, nu, omega)?;
        self.jet_unchecked(t, s)?.metric_inv(nu, omega)
    }

    /// Eulerian velocity of the moving tube, `w o F = d_t F`.
    pub fn curve_velocity(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<CurveVelocity> {
        self.check_point(t, s, nu, omega)?;
        let m = self.motion_unchecked(t, s)?;
        Ok(CurveVelocity {
            value: m.chart_velocity(nu, omega),
            one_sided: m.one_sided,
        })
    }

    /// Full space-time Jacobian `D𝓕 = [[1, 0], [d_t F, grad F]]`.
    pub fn space_time_jacobian(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Matrix4<f64>> {
        let g = self.grad_f(t, s, nu, omega)?;
        let v = self.curve_velocity(t, s, nu, omega)?.value;
        Ok(block4(v, g))
    }

    /// Inverse of the space-time Jacobian from its block formula
    /// `[[1, 0], [-grad F^{-1} d_t F, grad F^{-1}]]`.
    pub fn space_time_jacobian_inv(&self, t: f64, s: f64, nu: f64, omega: f64) -> Result<Matrix4<f64>> {
        let gi = self.inv_grad_f(t, s, nu, omega)?;
        let v = self.curve_velocity(t, s, nu, omega)?.value;
        Ok(block4(-(gi * v), gi))
    }

    /// Tube coordinates of `x` at time `t`, or `None` when `x` is outside
    /// `N_eps0(t)`.
    pub fn invert_chart(&self, t: f64, x: &Vec3) -> Result<Option<TubeCoords>> {
        check_range("t", t, self.t_span.0, self.t_span.1)?;
        let slice = self.slice(t);
        let (mut best, mut dmin) = (0usize, f64::INFINITY);
        for (k, (_, p)) in slice.samples.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < dmin {
                dmin = d;
                best = k;
            }
        }
        let dmin = dmin.sqrt();
        let gap = slice
            .samples
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).norm())
            .fold(0.0_f64, f64::max);
        if dmin > self.eps0 + gap {
            return Ok(None);
        }

        let s_lo = -self.eps0 - 0.5;
        let s_hi = 1.0 + self.eps0 + 0.5;
        let mut s = slice.samples[best].0;
        let frame = self.frame_raw(t, s)?;
        let rel = x - slice.samples[best].1;
        let mut nu = rel.dot(&frame.n_vec);
        let mut omega = rel.dot(&frame.b_vec);
        let tol = 1e-13 * (1.0 + x.norm());
        let mut converged = false;
        let mut jet = self.jet_unchecked(t, s)?;
        let mut res = jet.point(nu, omega) - x;
        for _ in 0..self.opts.newton_max_iter {
            if res.norm() < tol {
                converged = true;
                break;
            }
            let Some(jinv) = jet.grad_f(nu, omega).try_inverse() else {
                break;
            };
            let step = jinv * res;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let sn = (s - lambda * step.x).clamp(s_lo, s_hi);
                let (nn, on) = (nu - lambda * step.y, omega - lambda * step.z);
                let jn = self.jet_unchecked(t, sn)?;
                let rn = jn.point(nn, on) - x;
                if rn.norm() < res.norm() || rn.norm() < tol {
                    s = sn;
                    nu = nn;
                    omega = on;
                    jet = jn;
                    res = rn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !converged && res.norm() < 1e-10 * (1.0 + x.norm()) {
            converged = true;
        }
        if !converged {
            if dmin < self.eps0 {
                return Err(Error::ChartValidity {
                    reason: format!("chart inversion did not converge for x = {:?}", x.as_slice()),
                    t,
                    s,
                    nu,
                    omega,
                });
            }
            return Ok(None);
        }
        let coords = TubeCoords { s, nu, omega };
        let inside_s = s >= -self.eps0 - 1e-14 && s <= 1.0 + self.eps0 + 1e-14;
        let inside_r = coords.radius() <= self.eps0 * (1.0 + 1e-14);
        Ok((inside_s && inside_r).then_some(coords))
    }

    fn lattice_times(&self, density: usize) -> Vec<f64> {
        let (t0, t1) = self.t_span;
        if t1 <= t0 {
            return vec![t0];
        }
        let m = (density / 4).max(3);
        (0..m).map(|i| t0 + (t1 - t0) * i as f64 / (m - 1) as f64).collect()
    }

    /// Polar lattice over the extended parameter domain at the given density;
    /// the callback receives the jet and each `(nu, omega)`.
    fn for_each_lattice_point(
        &self,
        density: usize,
        mut f: impl FnMut(&SliceJet, f64, f64) -> Result<()>,
    ) -> Result<()> {
        let density = density.max(2);
        let (s0, s1) = self.s_range();
        let radial = (density / 2).max(2);
        for t in self.lattice_times(density) {
            for i in 0..=density {
                let s = s0 + (s1 - s0) * i as f64 / density as f64;
                let jet = self.jet_unchecked(t, s)?;
                f(&jet, 0.0, 0.0)?;
                for r in 1..=radial {
                    let rho = self.eps0 * r as f64 / radial as f64;
                    for a in 0..density {
                        let th = 2.0 * std::f64::consts::PI * a as f64 / density as f64;
                        f(&jet, rho * th.cos(), rho * th.sin())?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks `J_F > 0` (and positive orientation of `grad F`) on a lattice.
    pub fn validate_lattice(&self, density: usize) -> Result<()> {
        self.for_each_lattice_point(density, |jet, nu, omega| {
            jet.det_jf(nu, omega)?;
            let det = jet.grad_f(nu, omega).determinant();
            if !(det > 0.0) {
                return Err(jet.chart_error(nu, omega, format!("grad F is not positively oriented (det {det:e})")));
            }
            Ok(())
        })
    }

    /// Minimum over a lattice of the smallest eigenvalue of
    /// `(grad F^T grad F)^{-1} J_F`.
    pub fn coercivity_beta(&self, density: usize) -> Result<f64> {
        let mut beta = f64::INFINITY;
        let mut witness = (0.0, 0.0, 0.0, 0.0);
        self.for_each_lattice_point(density, |jet, nu, omega| {
            let m = jet.metric_inv(nu, omega)? * jet.det_jf(nu, omega)?;
            let sym = 0.5 * (m + m.transpose());
            let lam = SymmetricEigen::new(sym).eigenvalues.min();
            if lam < beta {
                beta = lam;
                witness = (jet.t, jet.s, nu, omega);
            }
            Ok(())
        })?;
        if !(beta > 0.0) {
            return Err(Error::ChartValidity {
                reason: format!("coercivity constant is nonpositive ({beta:e})"),
                t: witness.0,
                s: witness.1,
                nu: witness.2,
                omega: witness.3,
            });
        }
        Ok(beta)
    }

    /// Ambient divergence of `q` at `F(t, s, nu, omega)`, computed in tube
    /// coordinates as `(1 / J_F) div_{s,nu,omega}[J_F grad F^{-1} (q o F)]`
    /// with centered differences of step `h`.
    pub fn divergence_in_tube(
        &self,
        q: &dyn Fn(&Vec3) -> Vec3,
        t: f64,
        s: f64,
        nu: f64,
        omega: f64,
        h: f64,
    ) -> Result<f64> {
        self.check_point(t, s, nu, omega)?;
        let flux = |s: f64, nu: f64, omega: f64| -> Result<Vec3> {
            let jet = self.jet_unchecked(t, s)?;
            Ok(jet.det_jf(nu, omega)? * jet.inv_grad_f(nu, omega)? * q(&jet.point(nu, omega)))
        };
        let ds = (flux(s + h, nu, omega)?.x - flux(s - h, nu, omega)?.x) / (2.0 * h);
        let dn = (flux(s, nu + h, omega)?.y - flux(s, nu - h, omega)?.y) / (2.0 * h);
        let dw = (flux(s, nu, omega + h)?.z - flux(s, nu, omega - h)?.z) / (2.0 * h);
        let jf = self.jet_unchecked(t, s)?.det_jf(nu, omega)?;
        Ok((ds + dn + dw) / jf)
    }

    /// Checks that `gamma(t, s)` stays strictly inside the box `[lo, hi]` for
    /// every sampled `(t, s)` in the extended parameter domain.
    pub fn check_inside_box(&self, lo: &Vec3, hi: &Vec3, density: usize) -> Result<()> {
        let (s0, s1) = self.s_range();
        for t in self.lattice_times(density) {
            for i in 0..=density {
                let s = s0 + (s1 - s0) * i as f64 / density as f64;
                let p = self.curve.position(t, s);
                if (0..3).any(|k| !(p[k] > lo[k] && p[k] < hi[k])) {
                    return Err(Error::ChartValidity {
                        reason: format!("curve point {:?} is not strictly inside the domain", p.as_slice()),
                        t,
                        s,
                        nu: 0.0,
                        omega: 0.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Largest second difference `|gamma(s+h) - 2 gamma(s) + gamma(s-h)| / h^2`
    /// and time difference quotient `|gamma(t+k) - gamma(t)| / k` over a lattice.
    /// Bounded values at two successive densities witness C2 in `s` and C1 in `t`.
    pub fn smoothness_bounds(&self, density: usize) -> (f64, f64) {
        let (s0, s1) = self.s_range();
        let h = (s1 - s0) / density as f64;
        let times = self.lattice_times(density);
        let k = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        let mut d2 = 0.0_f64;
        let mut dt = 0.0_f64;
        for &t in &times {
            for i in 1..density {
                let s = s0 + h * i as f64;
                let c = self.curve.position(t, s);
                let second = (self.curve.position(t, s + h) - 2.0 * c + self.curve.position(t, s - h)) / (h * h);
                d2 = d2.max(second.norm());
                if k > 0.0 && t + k <= self.t_span.1 + 1e-12 {
                    dt = dt.max(((self.curve.position(t + k, s) - c) / k).norm());
                }
            }
        }
        (d2, dt)
    }
}

fn block4(lower_left: Vec3, block: Mat3) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 1.0;
    for i in 0..3 {
        m[(i + 1, 0)] = lower_left[i];
        for j in 0..3 {
            m[(i + 1, j + 1)] = block[(i, j)];
        }
    }
    m
}

/// Chart for a built-in curve with its analytic frame.
pub fn builtin_chart(curve: BuiltinCurve, eps0: f64, t_span: (f64, f64)) -> Result<TubeChart> {
    TubeChart::new(Arc::new(curve), eps0, t_span, FrameMode::Analytic)
}

/// Where a curve comes from: a built-in analytic curve or a polyline file.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Builtin(BuiltinCurve),
    Polyline(std::path::PathBuf),
}

impl CurveSource {
    /// Built-in curves use their analytic frame, polylines the rotation-minimizing one.
    pub fn chart(&self, eps0: f64, t_span: (f64, f64)) -> Result<TubeChart> {
        match self {
            CurveSource::Builtin(c) => builtin_chart(c.clone(), eps0, t_span),
            CurveSource::Polyline(path) => {
                let curve = PolylineCurve::from_path(path)?;
                TubeChart::new(Arc::new(curve), eps0, t_span, FrameMode::RotationMinimizing)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            CurveSource::Builtin(c) => {
                let name = format!("{c:?}");
                name.split([' ', '{']).next().unwrap_or("curve").to_string()
            }
            CurveSource::Polyline(p) => p.display().to_string(),
        }
    }
}

#[cfg(test)]
mod tests;
