//! Distance to the core cylinder, the cutoff, and the concentrated-capacity
//! coefficient fields `a`, `K`, `v` built from them.

mod fields;

use serde::{Deserialize, Serialize};

pub use fields::{looks_continuous, max_neighbour_jump, ScalarField, ScalarFn, VectorField, VectorFn};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, TubeChart, TubeCoords, Vec3};

/// Tube radius `eps0`, core radius `eps` and collar width `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub eps0: f64,
    pub eps: f64,
    pub delta: f64,
}

/// How `delta` follows `eps` along a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaRule {
    Eps3,
    Eps11,
    Explicit,
}

impl DeltaRule {
    pub fn delta(self, eps: f64, explicit: f64) -> f64 {
        match self {
            DeltaRule::Eps3 => eps.powi(3),
            DeltaRule::Eps11 => eps.powi(11),
            DeltaRule::Explicit => explicit,
        }
    }
}

impl CapacityParams {
    pub fn new(eps0: f64, eps: f64, delta: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps > 0.0 && eps < eps0) {
            return Err(Error::InvalidParams(format!("need 0 < eps < eps0, got eps = {eps}, eps0 = {eps0}")));
        }
        if !(delta > 0.0 && delta < eps0 - eps) {
            return Err(Error::InvalidParams(format!(
                "need 0 < delta < eps0 - eps = {}, got delta = {delta}",
                eps0 - eps
            )));
        }
        Ok(CapacityParams { eps0, eps, delta })
    }

    pub fn with_rule(eps0: f64, eps: f64, rule: DeltaRule, explicit: f64) -> Result<Self> {
        Self::new(eps0, eps, rule.delta(eps, explicit))
    }

    /// `eps0^2 / eps^2`.
    pub fn contrast(&self) -> f64 {
        (self.eps0 / self.eps).powi(2)
    }
}

/// Closed-form distance from `(s, nu, omega)` to `[0, 1] x D_eps`.
pub fn dist_core(p: &CapacityParams, s: f64, nu: f64, omega: f64) -> f64 {
    let below = (-s).max(0.0);
    let above = (s - 1.0).max(0.0);
    let radial = (nu.hypot(omega) - p.eps).max(0.0);
    (below * below + above * above + radial * radial).sqrt()
}

/// Gradient of [`dist_core`] in `(s, nu, omega)`; zero on the core.
pub fn dist_core_grad(p: &CapacityParams, s: f64, nu: f64, omega: f64) -> Vec3 {
    let d = dist_core(p, s, nu, omega);
    if d == 0.0 {
        return Vec3::zeros();
    }
    let rho = nu.hypot(omega);
    let radial = (rho - p.eps).max(0.0);
    let ds = -(-s).max(0.0) + (s - 1.0).max(0.0);
    let (dn, dw) = if radial > 0.0 {
        (radial * nu / rho, radial * omega / rho)
    } else {
        (0.0, 0.0)
    };
    Vec3::new(ds, dn, dw) / d
}

/// Hat cutoff `(1 - r / delta)_+`.
pub fn cutoff_chi(delta: f64, r: f64) -> f64 {
    (1.0 - r / delta).max(0.0)
}

/// `chi_delta(d_eps(s, nu, omega))`.
pub fn zeta_at(p: &CapacityParams, c: &TubeCoords) -> f64 {
    cutoff_chi(p.delta, dist_core(p, c.s, c.nu, c.omega))
}

/// Bulk and curve-attached material data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub k0: f64,
    /// Axial diffusivity, a function of `(s, nu, omega)`.
    pub k_s: ScalarField,
    /// Transverse diffusivity, a function of `(s, nu, omega)`.
    pub k_n: ScalarField,
    /// Diffusivity floor.
    pub theta: f64,
    pub v: VectorField,
    pub v_c: VectorField,
    pub u0: ScalarField,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::unit()
    }
}

impl MaterialParams {
    /// Unit diffusivities, no advection, `u0 = 1`.
    pub fn unit() -> Self {
        MaterialParams {
            k0: 1.0,
            k_s: ScalarField::constant(1.0),
            k_n: ScalarField::constant(1.0),
            theta: 1.0,
            v: VectorField::zero(),
            v_c: VectorField::zero(),
            u0: ScalarField::constant(1.0),
        }
    }

    /// Checks the floor `0 < theta <= min(k0, k_s, k_n)` on a lattice over the
    /// parameter box and runs the sampled continuity check on every field.
    pub fn validate(&self, eps0: f64, t_span: (f64, f64), domain: (&Vec3, &Vec3)) -> Result<()> {
        if !(self.k0 > 0.0) {
            return Err(Error::InvalidParams(format!("k0 must be positive, got {}", self.k0)));
        }
        if !(self.theta > 0.0 && self.theta <= self.k0) {
            return Err(Error::InvalidParams(format!(
                "theta = {} must satisfy 0 < theta <= k0 = {}",
                self.theta, self.k0
            )));
        }
        let tube_lo = Vec3::new(-eps0, -eps0, -eps0);
        let tube_hi = Vec3::new(1.0 + eps0, eps0, eps0);
        let n = 6;
        for t in [t_span.0, 0.5 * (t_span.0 + t_span.1), t_span.1] {
            for (name, field) in [("k_s", &self.k_s), ("k_n", &self.k_n)] {
                let f = |x: &Vec3| field.eval(t, x);
                for i in 0..=n {
                    for j in 0..=n {
                        for k in 0..=n {
                            let r = Vec3::new(i as f64, j as f64, k as f64) / n as f64;
                            let x = tube_lo + (tube_hi - tube_lo).component_mul(&r);
                            if x.y.hypot(x.z) > eps0 {
                                continue;
                            }
                            let val = f(&x);
                            if !(val >= self.theta) {
                                return Err(Error::InvalidParams(format!(
                                    "{name} = {val} at (s, nu, omega) = {:?} is below theta = {}",
                                    x.as_slice(),
                                    self.theta
                                )));
                            }
                        }
                    }
                }
                if !looks_continuous(&f, &tube_lo, &tube_hi, 8) {
                    return Err(Error::InvalidParams(format!("{name} fails the sampled continuity check")));
                }
            }
            let scalars: [(&str, Box<dyn Fn(&Vec3) -> f64>); 7] = [
                ("u0", Box::new(|x: &Vec3| self.u0.eval(t, x))),
                ("v.x", Box::new(|x: &Vec3| self.v.eval(t, x).x)),
                ("v.y", Box::new(|x: &Vec3| self.v.eval(t, x).y)),
                ("v.z", Box::new(|x: &Vec3| self.v.eval(t, x).z)),
                ("v_c.x", Box::new(|x: &Vec3| self.v_c.eval(t, x).x)),
                ("v_c.y", Box::new(|x: &Vec3| self.v_c.eval(t, x).y)),
                ("v_c.z", Box::new(|x: &Vec3| self.v_c.eval(t, x).z)),
            ];
            for (name, f) in scalars.iter() {
                if !looks_continuous(f.as_ref(), domain.0, domain.1, 8) {
                    return Err(Error::InvalidParams(format!("{name} fails the sampled continuity check")));
                }
            }
        }
        Ok(())
    }
}

/// A point of the tube with its chart coordinates and cutoff value.
#[derive(Debug, Clone, Copy)]
pub struct TubeSample {
    pub coords: TubeCoords,
    pub dist: f64,
    pub zeta: f64,
}

/// Pointwise concentrated-capacity coefficients for one chart and parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients<'a> {
    pub chart: &'a TubeChart,
    pub params: CapacityParams,
    pub material: &'a MaterialParams,
}

impl<'a> Coefficients<'a> {
    pub fn new(chart: &'a TubeChart, params: CapacityParams, material: &'a MaterialParams) -> Result<Self> {
        if (params.eps0 - chart.eps0()).abs() > 1e-14 * chart.eps0() {
            return Err(Error::InvalidParams(format!(
                "capacity eps0 = {} differs from chart eps0 = {}",
                params.eps0,
                chart.eps0()
            )));
        }
        Ok(Coefficients {
            chart,
            params,
            material,
        })
    }

    /// Tube coordinates of `x` and the cutoff there, or `None` outside `N_eps0(t)`.
    pub fn locate(&self, t: f64, x: &Vec3) -> Result<Option<TubeSample>> {
        Ok(self.chart.invert_chart(t, x)?.map(|coords| {
            let dist = dist_core(&self.params, coords.s, coords.nu, coords.omega);
            TubeSample {
                coords,
                dist,
                zeta: cutoff_chi(self.params.delta, dist),
            }
        }))
    }

    pub fn zeta(&self, t: f64, x: &Vec3) -> Result<f64> {
        Ok(self.locate(t, x)?.map_or(0.0, |p| p.zeta))
    }

    pub fn a_from_zeta(&self, zeta: f64) -> f64 {
        1.0 + (self.params.contrast() - 1.0) * zeta
    }

    pub fn capacity_a(&self, t: f64, x: &Vec3) -> Result<f64> {
        Ok(self.a_from_zeta(self.zeta(t, x)?))
    }

    /// Frame-aligned tensor `(t n b) diag(k_s, k_n, k_n) (t n b)^T` at a chart point.
    pub fn frame_tensor(&self, t: f64, c: &TubeCoords) -> Result<Mat3> {
        let q = self.chart.eval_frame(t, c.s)?.matrix();
        let y = Vec3::new(c.s, c.nu, c.omega);
        let ks = self.material.k_s.eval(t, &y);
        let kn = self.material.k_n.eval(t, &y);
        Ok(q * Mat3::from_diagonal(&Vec3::new(ks, kn, kn)) * q.transpose())
    }

    pub fn diffusivity_k(&self, t: f64, x: &Vec3) -> Result<Mat3> {
        let k0 = self.material.k0 * Mat3::identity();
        match self.locate(t, x)? {
            Some(p) if p.zeta > 0.0 => {
                let kc = self.frame_tensor(t, &p.coords)?;
                Ok(k0 + (self.params.contrast() * kc - k0) * p.zeta)
            }
            _ => Ok(k0),
        }
    }

    pub fn advection_v(&self, t: f64, x: &Vec3) -> Result<Vec3> {
        let v = self.material.v.eval(t, x);
        let zeta = self.zeta(t, x)?;
        if zeta == 0.0 {
            return Ok(v);
        }
        Ok(v + (self.params.contrast() * self.material.v_c.eval(t, x) - v) * zeta)
    }

    /// `d_t a` on the open collar `0 < d_eps < delta`, zero elsewhere.
    pub fn dt_capacity_a(&self, t: f64, x: &Vec3) -> Result<f64> {
        let Some(p) = self.locate(t, x)? else {
            return Ok(0.0);
        };
        if !(p.dist > 0.0 && p.dist < self.params.delta) {
            return Ok(0.0);
        }
        let c = p.coords;
        let grad_d = dist_core_grad(&self.params, c.s, c.nu, c.omega);
        let inv = self.chart.inv_grad_f(t, c.s, c.nu, c.omega)?;
        let w = self.chart.curve_velocity(t, c.s, c.nu, c.omega)?.value;
        Ok((self.params.contrast() - 1.0) / self.params.delta * grad_d.dot(&(inv * w)))
    }

    /// `max |v|, |v_C|` over the given points at time `t`.
    pub fn velocity_sup<'p>(&self, t: f64, points: impl IntoIterator<Item = &'p Vec3>) -> f64 {
        points.into_iter().fold(0.0_f64, |m, x| {
            m.max(self.material.v.eval(t, x).norm())
                .max(self.material.v_c.eval(t, x).norm())
        })
    }
}
