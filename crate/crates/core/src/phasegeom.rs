//! Floating-point weights, cutoff and vector-field coefficients at phase points.

use crate::error::GeomError;
use crate::symkernel::{FieldId, WeightId};
use nalgebra::Vector3;

/// A point `(t, x, v)` of phase space with `v != 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl PhasePoint {
    pub fn new(t: f64, x: [f64; 3], v: [f64; 3]) -> Self {
        Self {
            t,
            x: Vector3::from(x),
            v: Vector3::from(v),
        }
    }

    /// Coordinates ordered as `(t, x1, x2, x3, v1, v2, v3)`.
    pub fn coords(&self) -> [f64; 7] {
        [self.t, self.x[0], self.x[1], self.x[2], self.v[0], self.v[1], self.v[2]]
    }

    pub fn speed(&self) -> f64 {
        self.v.norm()
    }

    pub fn radius(&self) -> f64 {
        self.x.norm()
    }

    fn check(&self) -> Result<f64, GeomError> {
        let w = self.speed();
        if w > 0.0 && w.is_finite() {
            Ok(w)
        } else {
            Err(GeomError::ZeroVelocity)
        }
    }
}

/// Evaluates a weight. `z` is returned as the nonnegative root of `z^2`.
pub fn eval_weight(id: WeightId, p: &PhasePoint) -> Result<f64, GeomError> {
    let w = p.check()?;
    let (t, x, v) = (p.t, &p.x, &p.v);
    let zij = |i: usize, j: usize| (x[i] * v[j] - x[j] * v[i]) / w;
    let z0k = |k: usize| x[k] - t * v[k] / w;
    Ok(match id {
        WeightId::VHat0 => 1.0,
        WeightId::VHat1 => v[0] / w,
        WeightId::VHat2 => v[1] / w,
        WeightId::VHat3 => v[2] / w,
        WeightId::S => t - x.dot(v) / w,
        WeightId::Z12 => zij(0, 1),
        WeightId::Z13 => zij(0, 2),
        WeightId::Z23 => zij(1, 2),
        WeightId::Z01 => z0k(0),
        WeightId::Z02 => z0k(1),
        WeightId::Z03 => z0k(2),
        WeightId::Morawetz => -(t * t + x.norm_squared()) + 2.0 * t * x.dot(v) / w,
        WeightId::Z => z_squared(p)?.sqrt(),
    })
}

/// `z^2`, the sum of squares of the weights of `k0`.
pub fn z_squared(p: &PhasePoint) -> Result<f64, GeomError> {
    let mut acc = 0.0;
    for id in WeightId::K0 {
        let w = eval_weight(id, p)?;
        acc += w * w;
    }
    Ok(acc)
}

/// The cutoff: `0` below `1/2`, `1` above `1`, quintic smoothstep between.
pub fn chi(s: f64) -> f64 {
    let u = ((s - 0.5) / 0.5).clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

pub fn chi_prime(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        return 0.0;
    }
    let u = (s - 0.5) / 0.5;
    2.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// `(tau_plus, tau_minus)`.
pub fn tau(p: &PhasePoint) -> (f64, f64) {
    let r = p.radius();
    ((1.0 + (p.t + r).powi(2)).sqrt(), (1.0 + (p.t - r).powi(2)).sqrt())
}

/// `tau_minus` at `(t, r)`.
pub fn tau_minus(t: f64, r: f64) -> f64 {
    (1.0 + (t - r).powi(2)).sqrt()
}

/// Angular part of the velocity, `|v| ` at `x = 0`.
pub fn slashed_v(p: &PhasePoint) -> f64 {
    let r = p.radius();
    if r == 0.0 {
        return p.speed();
    }
    let vr = p.x.dot(&p.v) / r;
    (p.v.norm_squared() - vr * vr).max(0.0).sqrt()
}

/// Coefficients of a commutation field at `p`, ordered as [`PhasePoint::coords`].
pub fn field_coefficients(id: FieldId, p: &PhasePoint) -> [f64; 7] {
    let (t, x, v) = (p.t, &p.x, &p.v);
    let mut c = [0.0; 7];
    match id {
        FieldId::Dt => c[0] = 1.0,
        FieldId::D1 => c[1] = 1.0,
        FieldId::D2 => c[2] = 1.0,
        FieldId::D3 => c[3] = 1.0,
        FieldId::S => {
            c[0] = t;
            c[1] = x[0];
            c[2] = x[1];
            c[3] = x[2];
        }
        FieldId::Sv => {
            c[4] = v[0];
            c[5] = v[1];
            c[6] = v[2];
        }
        FieldId::Om12 | FieldId::Om13 | FieldId::Om23 => {
            let (i, j) = id.rotation_pair().expect("rotation");
            let (i, j) = (i as usize - 1, j as usize - 1);
            c[1 + j] += x[i];
            c[1 + i] -= x[j];
            c[4 + j] += v[i];
            c[4 + i] -= v[j];
        }
    }
    c
}

/// Applies a field to `z^2` by central differences along its flow direction.
pub fn field_on_z_squared(id: FieldId, p: &PhasePoint, h: f64) -> Result<f64, GeomError> {
    let c = field_coefficients(id, p);
    let shift = |s: f64| {
        let q = p.coords();
        PhasePoint::new(
            q[0] + s * c[0],
            [q[1] + s * c[1], q[2] + s * c[2], q[3] + s * c[3]],
            [q[4] + s * c[4], q[5] + s * c[5], q[6] + s * c[6]],
        )
    };
    Ok((z_squared(&shift(h))? - z_squared(&shift(-h))?) / (2.0 * h))
}
