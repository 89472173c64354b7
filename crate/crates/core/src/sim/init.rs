//! Spherically symmetric initial data `f0 = eps a(|x|) b(|v|) c(x.v/|v|) / N`.

use crate::error::SimError;
use crate::quadrature::gauss_legendre_on;
use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Profiles:
/// `a(r) = (1 - r^2/R^2)^4` on `r < R`,
/// `b(w) = (4 (w - lo)(hi - w)/(hi - lo)^2)^4` on `lo < w < hi`,
/// `c = 1 + kappa (x.v/|v|)/R`.
/// The normalisation makes the total charge equal to `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub epsilon: f64,
    pub radius: f64,
    pub v_low: f64,
    pub v_high: f64,
    pub kappa: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            radius: 2.0,
            v_low: 2.0,
            v_high: 5.0,
            kappa: 0.0,
        }
    }
}

impl InitialData {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidInitialData(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.v_low >= 2.0) {
            return bad(format!(
                "f0 must vanish for |v| <= 2, but the speed support starts at {}",
                self.v_low
            ));
        }
        if !(self.v_high > self.v_low && self.v_high.is_finite()) {
            return bad(format!("v_high must exceed v_low, got {}", self.v_high));
        }
        if !(self.kappa.abs() < 1.0) {
            return bad(format!("|kappa| must be below 1, got {}", self.kappa));
        }
        Ok(())
    }

    pub fn a(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let s = 1.0 - (r / self.radius).powi(2);
        s * s * s * s
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let r2 = self.radius * self.radius;
        let s = 1.0 - r * r / r2;
        -8.0 * r / r2 * s * s * s
    }

    pub fn b(&self, w: f64) -> f64 {
        if w <= self.v_low || w >= self.v_high {
            return 0.0;
        }
        let p = self.b_base(w);
        p * p * p * p
    }

    pub fn b_prime(&self, w: f64) -> f64 {
        if w <= self.v_low || w >= self.v_high {
            return 0.0;
        }
        let d = self.v_high - self.v_low;
        let p = self.b_base(w);
        4.0 * p * p * p * 4.0 * (self.v_high + self.v_low - 2.0 * w) / (d * d)
    }

    fn b_base(&self, w: f64) -> f64 {
        let d = self.v_high - self.v_low;
        4.0 * (w - self.v_low) * (self.v_high - w) / (d * d)
    }

    /// `int a dx`.
    pub fn a_mass(&self) -> f64 {
        4.0 * PI
            * gauss_legendre_on(12, 0.0, self.radius)
                .iter()
                .map(|(r, w)| w * self.a(*r) * r * r)
                .sum::<f64>()
    }

    /// `int b dv`.
    pub fn b_mass(&self) -> f64 {
        4.0 * PI
            * gauss_legendre_on(12, self.v_low, self.v_high)
                .iter()
                .map(|(s, w)| w * self.b(*s) * s * s)
                .sum::<f64>()
    }

    /// `epsilon / (int a dx int b dv)`.
    pub fn amplitude(&self) -> f64 {
        self.epsilon / (self.a_mass() * self.b_mass())
    }

    pub fn total_charge(&self) -> f64 {
        self.epsilon
    }

    fn c(&self, x: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        1.0 + self.kappa * x.dot(v) / (v.norm() * self.radius)
    }

    pub fn f0(&self, x: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        let a = self.a(x.norm());
        if a == 0.0 {
            return 0.0;
        }
        self.amplitude() * a * self.b(v.norm()) * self.c(x, v)
    }

    /// `(grad_x f0, grad_v f0)` stacked.
    pub fn grad_f0(&self, x: &Vector3<f64>, v: &Vector3<f64>) -> Vector6<f64> {
        let r = x.norm();
        let w = v.norm();
        let (a, ap) = (self.a(r), self.a_prime(r));
        let (b, bp) = (self.b(w), self.b_prime(w));
        if (a == 0.0 && ap == 0.0) || (b == 0.0 && bp == 0.0) {
            return Vector6::zeros();
        }
        let c = self.c(x, v);
        let vh = v / w;
        let xh = if r > 0.0 { x / r } else { Vector3::zeros() };
        let k = self.kappa / self.radius;
        let grad_c_x = vh * k;
        let grad_c_v = (x - vh * x.dot(&vh)) * (k / w);
        let gx = xh * (ap * b * c) + grad_c_x * (a * b);
        let gv = vh * (a * bp * c) + grad_c_v * (a * b);
        let amp = self.amplitude();
        Vector6::new(gx[0], gx[1], gx[2], gv[0], gv[1], gv[2]) * amp
    }

    /// Closed form of `int int x . grad_x f0 dv dx`, which integrates by parts to `-3 Q`.
    pub fn scaling_moment_quadrature(&self) -> f64 {
        let radial: f64 = 4.0
            * PI
            * gauss_legendre_on(16, 0.0, self.radius)
                .iter()
                .map(|(r, w)| w * r * self.a_prime(*r) * r * r)
                .sum::<f64>();
        self.amplitude() * radial * self.b_mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn speed_support_below_two_rejected() {
        let d = InitialData {
            v_low: 1.5,
            ..InitialData::default()
        };
        assert!(d.validate().is_err());
        assert!(InitialData::default().validate().is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = InitialData {
            kappa: 0.4,
            ..InitialData::default()
        };
        let x = Vector3::new(0.3, -0.7, 0.5);
        let v = Vector3::new(1.9, 2.2, -0.8);
        let g = d.grad_f0(&x, &v);
        let h = 1e-6;
        for k in 0..6 {
            let mut xp = x;
            let mut vp = v;
            let mut xm = x;
            let mut vm = v;
            if k < 3 {
                xp[k] += h;
                xm[k] -= h;
            } else {
                vp[k - 3] += h;
                vm[k - 3] -= h;
            }
            let fd = (d.f0(&xp, &vp) - d.f0(&xm, &vm)) / (2.0 * h);
            assert_relative_eq!(g[k], fd, max_relative = 1e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_moment_is_minus_three_charge() {
        let d = InitialData::default();
        assert_relative_eq!(d.scaling_moment_quadrature(), -3.0 * d.epsilon, max_relative = 1e-12);
    }
}
