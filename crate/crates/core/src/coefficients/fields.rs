//! Scalar and vector material fields selectable by name in configuration.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, Vec3};

pub type ScalarFn = Arc<dyn Fn(f64, &Vec3) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, &Vec3) -> Vec3 + Send + Sync>;

/// Scalar field of `(t, x)`. For `k_s` and `k_n` the point is the tube
/// coordinate triple `(s, nu, omega)`; for `u0` it is the ambient point.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `value + gradient . x`.
    Linear {
        value: f64,
        gradient: [f64; 3],
    },
    /// `base + amplitude exp(-|x - center|^2 / (2 width^2))`.
    Bump {
        base: f64,
        amplitude: f64,
        center: [f64; 3],
        width: f64,
    },
    #[serde(skip)]
    Custom(ScalarFn),
}

/// Vector field of `(t, x)` in ambient coordinates.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorField {
    Constant {
        value: [f64; 3],
    },
    /// `value + gradient x`, with `gradient` given row by row.
    Linear {
        value: [f64; 3],
        gradient: [[f64; 3]; 3],
    },
    /// Rigid rotation `rate * axis x (x - center)`.
    Swirl {
        center: [f64; 3],
        axis: [f64; 3],
        rate: f64,
    },
    #[serde(skip)]
    Custom(VectorFn),
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn custom(f: impl Fn(f64, &Vec3) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Linear { value, gradient } => value + v3(*gradient).dot(x),
            ScalarField::Bump {
                base,
                amplitude,
                center,
                width,
            } => base + amplitude * (-(x - v3(*center)).norm_squared() / (2.0 * width * width)).exp(),
            ScalarField::Custom(f) => f(t, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant { value } if *value == 0.0)
    }
}

impl VectorField {
    pub fn zero() -> Self {
        VectorField::Constant { value: [0.0; 3] }
    }

    pub fn constant(value: [f64; 3]) -> Self {
        VectorField::Constant { value }
    }

    pub fn custom(f: impl Fn(f64, &Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        VectorField::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> Vec3 {
        match self {
            VectorField::Constant { value } => v3(*value),
            VectorField::Linear { value, gradient } => {
                let g = Mat3::new(
                    gradient[0][0],
                    gradient[0][1],
                    gradient[0][2],
                    gradient[1][0],
                    gradient[1][1],
                    gradient[1][2],
                    gradient[2][0],
                    gradient[2][1],
                    gradient[2][2],
                );
                v3(*value) + g * x
            }
            VectorField::Swirl { center, axis, rate } => *rate * v3(*axis).cross(&(x - v3(*center))),
            VectorField::Custom(f) => f(t, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Constant { value } if *value == [0.0; 3])
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant { value } => write!(f, "Constant({value})"),
            ScalarField::Linear { value, gradient } => write!(f, "Linear({value}, {gradient:?})"),
            ScalarField::Bump {
                base,
                amplitude,
                center,
                width,
            } => write!(f, "Bump({base}, {amplitude}, {center:?}, {width})"),
            ScalarField::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Constant { value } => write!(f, "Constant({value:?})"),
            VectorField::Linear { value, gradient } => write!(f, "Linear({value:?}, {gradient:?})"),
            VectorField::Swirl { center, axis, rate } => write!(f, "Swirl({center:?}, {axis:?}, {rate})"),
            VectorField::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Largest jump between lattice neighbours of `f` on the box `[lo, hi]` with
/// `n` intervals per side.
pub fn max_neighbour_jump(f: &dyn Fn(&Vec3) -> f64, lo: &Vec3, hi: &Vec3, n: usize) -> f64 {
    let node = |i: usize, j: usize, k: usize| {
        let r = Vec3::new(i as f64, j as f64, k as f64) / n as f64;
        lo + (hi - lo).component_mul(&r)
    };
    let mut jump = 0.0_f64;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let c = f(&node(i, j, k));
                if i < n {
                    jump = jump.max((f(&node(i + 1, j, k)) - c).abs());
                }
                if j < n {
                    jump = jump.max((f(&node(i, j + 1, k)) - c).abs());
                }
                if k < n {
                    jump = jump.max((f(&node(i, j, k + 1)) - c).abs());
                }
            }
        }
    }
    jump
}

/// Sampled continuity check: neighbour jumps must shrink when the lattice
/// is refined (a jump discontinuity keeps them at the jump size).
pub fn looks_continuous(f: &dyn Fn(&Vec3) -> f64, lo: &Vec3, hi: &Vec3, n: usize) -> bool {
    let coarse = max_neighbour_jump(f, lo, hi, n);
    let fine = max_neighbour_jump(f, lo, hi, 2 * n);
    let scale = 1e-12 * (1.0 + f(lo).abs().max(f(hi).abs()));
    !fine.is_nan() && (fine <= scale || fine < 0.75 * coarse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let x = Vec3::new(0.1, 0.2, 0.3);
        assert_eq!(ScalarField::constant(2.0).eval(0.0, &x), 2.0);
        let lin = ScalarField::Linear {
            value: 1.0,
            gradient: [1.0, 0.0, 2.0],
        };
        assert!((lin.eval(0.0, &x) - 1.7).abs() < 1e-15);
        let sw = VectorField::Swirl {
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            rate: 2.0,
        };
        assert!((sw.eval(0.0, &Vec3::x()) - Vec3::new(0.0, 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn continuity_check_separates_jumps() {
        let lo = Vec3::zeros();
        let hi = Vec3::repeat(1.0);
        assert!(looks_continuous(&|x: &Vec3| (3.0 * x.x).sin() + x.y, &lo, &hi, 8));
        assert!(looks_continuous(&|_: &Vec3| 1.0, &lo, &hi, 8));
        assert!(!looks_continuous(&|x: &Vec3| if x.x > 0.47 { 1.0 } else { 0.0 }, &lo, &hi, 8));
    }

    #[test]
    fn config_round_trip() {
        let f: ScalarField = toml::from_str("kind = \"bump\"\nbase = 0.0\namplitude = 1.0\ncenter = [0.5, 0.5, 0.5]\nwidth = 0.1").unwrap();
        assert!((f.eval(0.0, &Vec3::repeat(0.5)) - 1.0).abs() < 1e-15);
        let text = toml::to_string(&f).unwrap();
        let g: ScalarField = toml::from_str(&text).unwrap();
        assert_eq!(format!("{f:?}"), format!("{g:?}"));
    }
}
