//! Curve library: analytic built-ins and spline-interpolated polylines.
//!
//! A curve is a map `(t, s) -> gamma(t, s)` defined at least on the extended
//! parameter interval `[-eps0, 1 + eps0]`. Built-in curves are analytic and
//! can be evaluated slightly outside that interval, which the finite-difference
//! stencils rely on.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::spline::NaturalSpline;
use super::{Frame, Vec3};
use crate::error::{Error, Result};

/// A smooth, time-dependent space curve.
pub trait CurvePath: Send + Sync + fmt::Debug {
    /// Position `gamma(t, s)`.
    fn position(&self, t: f64, s: f64) -> Vec3;

    /// Parametric derivative `d_s gamma(t, s)`. Defaults to a five-point stencil.
    fn tangent(&self, t: f64, s: f64) -> Vec3 {
        let h = 1e-3;
        (self.position(t, s - 2.0 * h) - 8.0 * self.position(t, s - h)
            + 8.0 * self.position(t, s + h)
            - self.position(t, s + 2.0 * h))
            / (12.0 * h)
    }

    /// Closed-form frame, when the curve carries one.
    fn analytic_frame(&self, _t: f64, _s: f64) -> Option<Frame> {
        None
    }

    /// Analytic `d_t gamma`, used only by tests as an oracle.
    fn velocity_hint(&self, _t: f64, _s: f64) -> Option<Vec3> {
        None
    }
}

/// Named analytic curves selectable from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BuiltinCurve {
    /// `gamma = origin + s * direction`.
    Segment {
        origin: [f64; 3],
        direction: [f64; 3],
        #[serde(default = "default_normal_hint")]
        normal_hint: [f64; 3],
    },
    /// `gamma = origin + s * direction + t * velocity`.
    TranslatingSegment {
        origin: [f64; 3],
        direction: [f64; 3],
        velocity: [f64; 3],
        #[serde(default = "default_normal_hint")]
        normal_hint: [f64; 3],
    },
    /// Planar arc `center + R (cos phi, sin phi, 0)` with `phi = s + angular_velocity * t`.
    Arc {
        center: [f64; 3],
        radius: f64,
        #[serde(default)]
        angular_velocity: f64,
    },
    /// Helix along x whose phase rotates and whose radius breathes in time.
    HelixWiggle {
        center: [f64; 3],
        length: f64,
        radius: f64,
        turns: f64,
        #[serde(default)]
        angular_velocity: f64,
        #[serde(default)]
        wiggle_amplitude: f64,
        #[serde(default)]
        wiggle_frequency: f64,
    },
}

fn default_normal_hint() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vector3::new(a[0], a[1], a[2])
}

impl BuiltinCurve {
    /// Unit-length segment along x through the origin: `gamma(t, s) = (s, 0, 0)`.
    pub fn unit_segment() -> Self {
        BuiltinCurve::Segment {
            origin: [0.0; 3],
            direction: [1.0, 0.0, 0.0],
            normal_hint: default_normal_hint(),
        }
    }

    /// Looks up a curve by its configuration name with the default parameters
    /// used throughout the test campaigns.
    pub fn by_name(name: &str) -> Option<Self> {
        let curve = match name {
            "segment" => BuiltinCurve::Segment {
                origin: [0.0, 0.5, 0.5],
                direction: [1.0, 0.0, 0.0],
                normal_hint: default_normal_hint(),
            },
            "translating-segment" => BuiltinCurve::TranslatingSegment {
                origin: [0.2, 0.45, 0.5],
                direction: [0.6, 0.0, 0.0],
                velocity: [0.0, 0.2, 0.0],
                normal_hint: default_normal_hint(),
            },
            "arc" => BuiltinCurve::Arc {
                center: [0.5, 0.5, 0.5],
                radius: 0.3,
                angular_velocity: 0.0,
            },
            "helix-wiggle" => BuiltinCurve::HelixWiggle {
                center: [0.5, 0.5, 0.5],
                length: 0.6,
                radius: 0.05,
                turns: 1.0,
                angular_velocity: 1.0,
                wiggle_amplitude: 0.2,
                wiggle_frequency: 2.0 * PI,
            },
            _ => return None,
        };
        Some(curve)
    }

    pub const NAMES: [&'static str; 4] = ["segment", "translating-segment", "arc", "helix-wiggle"];

    fn segment_frame(direction: Vec3, hint: Vec3) -> Frame {
        let t = direction.normalize();
        let mut n = hint - hint.dot(&t) * t;
        if n.norm() < 1e-8 {
            let alt = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            n = alt - alt.dot(&t) * t;
        }
        let n = n.normalize();
        Frame::new(t, n, t.cross(&n))
    }
}

impl CurvePath for BuiltinCurve {
    fn position(&self, t: f64, s: f64) -> Vec3 {
        match self {
            BuiltinCurve::Segment { origin, direction, .. } => v3(*origin) + s * v3(*direction),
            BuiltinCurve::TranslatingSegment {
                origin,
                direction,
                velocity,
                ..
            } => v3(*origin) + s * v3(*direction) + t * v3(*velocity),
            BuiltinCurve::Arc {
                center,
                radius,
                angular_velocity,
            } => {
                let phi = s + angular_velocity * t;
                v3(*center) + *radius * Vector3::new(phi.cos(), phi.sin(), 0.0)
            }
            BuiltinCurve::HelixWiggle { center, length, .. } => {
                let (phi, r) = self.helix_phase(t, s);
                v3(*center) + Vector3::new(length * (s - 0.5), r * phi.cos(), r * phi.sin())
            }
        }
    }

    fn tangent(&self, t: f64, s: f64) -> Vec3 {
        match self {
            BuiltinCurve::Segment { direction, .. } | BuiltinCurve::TranslatingSegment { direction, .. } => {
                v3(*direction)
            }
            BuiltinCurve::Arc {
                radius,
                angular_velocity,
                ..
            } => {
                let phi = s + angular_velocity * t;
                *radius * Vector3::new(-phi.sin(), phi.cos(), 0.0)
            }
            BuiltinCurve::HelixWiggle { length, turns, .. } => {
                let (phi, r) = self.helix_phase(t, s);
                let kappa = 2.0 * PI * turns;
                Vector3::new(*length, -r * kappa * phi.sin(), r * kappa * phi.cos())
            }
        }
    }

    fn analytic_frame(&self, t: f64, s: f64) -> Option<Frame> {
        let frame = match self {
            BuiltinCurve::Segment {
                direction, normal_hint, ..
            }
            | BuiltinCurve::TranslatingSegment {
                direction, normal_hint, ..
            } => Self::segment_frame(v3(*direction), v3(*normal_hint)),
            BuiltinCurve::Arc { angular_velocity, .. } => {
                let phi = s + angular_velocity * t;
                Frame::new(
                    Vector3::new(-phi.sin(), phi.cos(), 0.0),
                    -Vector3::new(phi.cos(), phi.sin(), 0.0),
                    Vector3::z(),
                )
            }
            BuiltinCurve::HelixWiggle { .. } => {
                let (phi, _) = self.helix_phase(t, s);
                let tv = self.tangent(t, s).normalize();
                let n = Vector3::new(0.0, -phi.cos(), -phi.sin());
                Frame::new(tv, n, tv.cross(&n))
            }
        };
        Some(frame)
    }

    fn velocity_hint(&self, t: f64, s: f64) -> Option<Vec3> {
        let v = match self {
            BuiltinCurve::Segment { .. } => Vector3::zeros(),
            BuiltinCurve::TranslatingSegment { velocity, .. } => v3(*velocity),
            BuiltinCurve::Arc {
                radius,
                angular_velocity,
                ..
            } => {
                let phi = s + angular_velocity * t;
                *radius * angular_velocity * Vector3::new(-phi.sin(), phi.cos(), 0.0)
            }
            BuiltinCurve::HelixWiggle {
                radius,
                angular_velocity,
                wiggle_amplitude,
                wiggle_frequency,
                ..
            } => {
                let (phi, r) = self.helix_phase(t, s);
                let dr = radius * wiggle_amplitude * wiggle_frequency * (wiggle_frequency * t).cos();
                Vector3::new(
                    0.0,
                    dr * phi.cos() - r * angular_velocity * phi.sin(),
                    dr * phi.sin() + r * angular_velocity * phi.cos(),
                )
            }
        };
        Some(v)
    }
}

impl BuiltinCurve {
    fn helix_phase(&self, t: f64, s: f64) -> (f64, f64) {
        match self {
            BuiltinCurve::HelixWiggle {
                radius,
                turns,
                angular_velocity,
                wiggle_amplitude,
                wiggle_frequency,
                ..
            } => {
                let phi = 2.0 * PI * turns * s + angular_velocity * t;
                let r = radius * (1.0 + wiggle_amplitude * (wiggle_frequency * t).sin());
                (phi, r)
            }
            _ => (0.0, 0.0),
        }
    }
}

/// Curve read from a sampled polyline file.
///
/// Rows are `t s x y z`, whitespace separated; `#` starts a comment. Samples
/// sharing a time value form one time level. Each level is interpolated in `s`
/// by natural cubic splines and the levels are joined by natural cubic splines
/// in `t`, so the curve is C2 in `s` and C1 in `t`. A single time level gives a
/// static curve. The frame is always rotation-minimizing.
#[derive(Debug, Clone)]
pub struct PolylineCurve {
    times: Vec<f64>,
    levels: Vec<[NaturalSpline; 3]>,
}

impl PolylineCurve {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<[f64; 5]> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            match vals {
                Ok(v) if v.len() == 5 => rows.push([v[0], v[1], v[2], v[3], v[4]]),
                _ => {
                    return Err(Error::Config(format!(
                        "polyline line {}: expected five numbers `t s x y z`",
                        lineno + 1
                    )))
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Config("polyline file has no samples".into()));
        }
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut times = Vec::new();
        let mut levels = Vec::new();
        let mut start = 0;
        while start < rows.len() {
            let t = rows[start][0];
            let end = start + rows[start..].iter().take_while(|r| r[0] == t).count();
            let level = &rows[start..end];
            if level.len() < 4 {
                return Err(Error::Config(format!(
                    "polyline time level t = {t} needs at least 4 samples, got {}",
                    level.len()
                )));
            }
            let s: Vec<f64> = level.iter().map(|r| r[1]).collect();
            if s.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(format!("polyline time level t = {t} repeats an s value")));
            }
            let coord = |k: usize| NaturalSpline::new(s.clone(), level.iter().map(|r| r[2 + k]).collect());
            levels.push([coord(0), coord(1), coord(2)]);
            times.push(t);
            start = end;
        }
        Ok(PolylineCurve { times, levels })
    }

    /// Smallest `s` interval covered by every time level.
    pub fn s_coverage(&self) -> (f64, f64) {
        self.levels.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), l| {
            let (a, b) = l[0].range();
            (lo.max(a), hi.min(b))
        })
    }

    pub fn time_coverage(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn blend(&self, t: f64, eval: impl Fn(&NaturalSpline) -> f64) -> Vec3 {
        let per_level = |k: usize| -> Vec<f64> { self.levels.iter().map(|l| eval(&l[k])).collect() };
        if self.times.len() == 1 {
            return Vector3::new(eval(&self.levels[0][0]), eval(&self.levels[0][1]), eval(&self.levels[0][2]));
        }
        let mut out = Vector3::zeros();
        for k in 0..3 {
            let spline = NaturalSpline::new(self.times.clone(), per_level(k));
            out[k] = spline.eval(t);
        }
        out
    }
}

impl CurvePath for PolylineCurve {
    fn position(&self, t: f64, s: f64) -> Vec3 {
        self.blend(t, |sp| sp.eval(s))
    }

    fn tangent(&self, t: f64, s: f64) -> Vec3 {
        self.blend(t, |sp| sp.derivative(s))
    }
}
