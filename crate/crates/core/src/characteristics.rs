//! Characteristics of the cut-off transport operator and their tangent flow.
//!
//! `dX/dt = V/|V|`, `dV/dt = chi(|V|) F(t, X)` where `F` already carries the sign
//! of the interaction. The tangent obeys `dD/dt = J D` with
//! `J = [[0, P(V)], [chi DF, chi' F V^T/|V|]]` and `P(V) = (I - V V^T/|V|^2)/|V|`.

use crate::error::CharError;
use crate::phasegeom::{chi, chi_prime, eval_weight, PhasePoint};
use crate::poisson::RadialField;
use crate::symkernel::WeightId;
use nalgebra::{Matrix3, Matrix6, Vector3};

/// Force field `sigma E(t, |x|) x/|x|` and its spatial Jacobian.
pub trait FieldSource: Sync {
    fn force(&self, t: f64, x: &Vector3<f64>) -> Vector3<f64>;
    fn jacobian(&self, t: f64, x: &Vector3<f64>) -> Matrix3<f64>;
}

/// Force and Jacobian of a radial field from `E` and `dE/dr` at `|x|`.
///
/// The Hessian is `(E/r)(I - xx^T/r^2) + E' xx^T/r^2`, with limit `E'(0) I` at the origin.
pub fn radial_force(sigma: f64, e: f64, de: f64, x: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let r = x.norm();
    if r == 0.0 {
        return (Vector3::zeros(), Matrix3::identity() * (sigma * de));
    }
    let xh = x / r;
    let outer = xh * xh.transpose();
    let jac = ((Matrix3::identity() - outer) * (e / r) + outer * de) * sigma;
    (xh * (sigma * e), jac)
}

/// No force.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl FieldSource for ZeroField {
    fn force(&self, _t: f64, _x: &Vector3<f64>) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn jacobian(&self, _t: f64, _x: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::zeros()
    }
}

/// A radial field given by a closure `(t, r) -> (E, dE/dr)`.
pub struct RadialFn<F> {
    pub sigma: f64,
    pub profile: F,
}

impl<F: Fn(f64, f64) -> (f64, f64) + Sync> FieldSource for RadialFn<F> {
    fn force(&self, t: f64, x: &Vector3<f64>) -> Vector3<f64> {
        let (e, de) = (self.profile)(t, x.norm());
        radial_force(self.sigma, e, de, x).0
    }
    fn jacobian(&self, t: f64, x: &Vector3<f64>) -> Matrix3<f64> {
        let (e, de) = (self.profile)(t, x.norm());
        radial_force(self.sigma, e, de, x).1
    }
}

/// A frozen solution of the radial Poisson problem.
pub struct StaticRadial<'a> {
    pub field: &'a RadialField,
    pub sigma: f64,
}

impl FieldSource for StaticRadial<'_> {
    fn force(&self, _t: f64, x: &Vector3<f64>) -> Vector3<f64> {
        let (e, de) = self.field.field_at(x.norm());
        radial_force(self.sigma, e, de, x).0
    }
    fn jacobian(&self, _t: f64, x: &Vector3<f64>) -> Matrix3<f64> {
        let (e, de) = self.field.field_at(x.norm());
        radial_force(self.sigma, e, de, x).1
    }
}

/// Field snapshots at increasing times, linearly interpolated in time.
#[derive(Clone, Debug, Default)]
pub struct FieldHistory {
    pub sigma: f64,
    pub times: Vec<f64>,
    pub fields: Vec<RadialField>,
}

impl FieldHistory {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            times: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, field: RadialField) {
        debug_assert!(self.times.last().is_none_or(|&l| t > l));
        self.times.push(t);
        self.fields.push(field);
    }

    fn profile(&self, t: f64, r: f64) -> (f64, f64) {
        if self.times.is_empty() {
            return (0.0, 0.0);
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.fields[0].field_at(r);
        }
        if k == self.times.len() {
            return self.fields[k - 1].field_at(r);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let th = (t - t0) / (t1 - t0);
        let (e0, d0) = self.fields[k - 1].field_at(r);
        let (e1, d1) = self.fields[k].field_at(r);
        (e0 + th * (e1 - e0), d0 + th * (d1 - d0))
    }
}

impl FieldSource for FieldHistory {
    fn force(&self, t: f64, x: &Vector3<f64>) -> Vector3<f64> {
        let (e, de) = self.profile(t, x.norm());
        radial_force(self.sigma, e, de, x).0
    }
    fn jacobian(&self, t: f64, x: &Vector3<f64>) -> Matrix3<f64> {
        let (e, de) = self.profile(t, x.norm());
        radial_force(self.sigma, e, de, x).1
    }
}

/// State of a characteristic, optionally with its tangent `D(X,V)/D(X0,V0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharState {
    pub t: f64,
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
    pub tangent: Option<Matrix6<f64>>,
}

impl CharState {
    pub fn new(t: f64, x: [f64; 3], v: [f64; 3]) -> Self {
        Self {
            t,
            x: Vector3::from(x),
            v: Vector3::from(v),
            tangent: None,
        }
    }

    pub fn with_tangent(mut self) -> Self {
        self.tangent = Some(Matrix6::identity());
        self
    }

    pub fn point(&self) -> PhasePoint {
        PhasePoint {
            t: self.t,
            x: self.x,
            v: self.v,
        }
    }
}

/// `(I - V V^T/|V|^2)/|V|`, the derivative of `V/|V|`.
pub fn projector(v: &Vector3<f64>) -> Matrix3<f64> {
    let w = v.norm();
    let vh = v / w;
    (Matrix3::identity() - vh * vh.transpose()) / w
}

/// Phase-space Jacobian of the characteristic vector field.
pub fn system_jacobian(force: &Vector3<f64>, dforce: &Matrix3<f64>, v: &Vector3<f64>) -> Matrix6<f64> {
    let w = v.norm();
    let vh = v / w;
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&projector(v));
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&(dforce * chi(w)));
    j.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(force * vh.transpose() * chi_prime(w)));
    j
}

struct Deriv {
    dx: Vector3<f64>,
    dv: Vector3<f64>,
    dd: Option<Matrix6<f64>>,
}

fn deriv(
    t: f64,
    x: &Vector3<f64>,
    v: &Vector3<f64>,
    d: Option<&Matrix6<f64>>,
    field: &dyn FieldSource,
) -> Result<Deriv, CharError> {
    let w = v.norm();
    if !(w > 0.0 && w.is_finite()) {
        return Err(CharError::ZeroVelocity { t });
    }
    let f = field.force(t, x);
    let dd = d.map(|d| system_jacobian(&f, &field.jacobian(t, x), v) * d);
    Ok(Deriv {
        dx: v / w,
        dv: f * chi(w),
        dd,
    })
}

/// One classical RK4 step of signed size `dt`, field frozen at the step's start time.
pub fn rk4_step(s: &CharState, field: &dyn FieldSource, dt: f64) -> Result<CharState, CharError> {
    let t = s.t;
    let k1 = deriv(t, &s.x, &s.v, s.tangent.as_ref(), field)?;
    let stage = |k: &Deriv, c: f64| {
        (
            s.x + k.dx * (c * dt),
            s.v + k.dv * (c * dt),
            s.tangent.map(|d| d + k.dd.expect("tangent") * (c * dt)),
        )
    };
    let (x2, v2, d2) = stage(&k1, 0.5);
    let k2 = deriv(t, &x2, &v2, d2.as_ref(), field)?;
    let (x3, v3, d3) = stage(&k2, 0.5);
    let k3 = deriv(t, &x3, &v3, d3.as_ref(), field)?;
    let (x4, v4, d4) = stage(&k3, 1.0);
    let k4 = deriv(t, &x4, &v4, d4.as_ref(), field)?;
    let c = dt / 6.0;
    let x = s.x + (k1.dx + (k2.dx + k3.dx) * 2.0 + k4.dx) * c;
    let v = s.v + (k1.dv + (k2.dv + k3.dv) * 2.0 + k4.dv) * c;
    let tangent = s.tangent.map(|d| {
        d + (k1.dd.expect("tangent")
            + (k2.dd.expect("tangent") + k3.dd.expect("tangent")) * 2.0
            + k4.dd.expect("tangent"))
            * c
    });
    let w = v.norm();
    if !(w > 0.0 && w.is_finite()) {
        return Err(CharError::ZeroVelocity { t: t + dt });
    }
    Ok(CharState {
        t: t + dt,
        x,
        v,
        tangent,
    })
}

/// One forward RK4 step.
pub fn push(s: &CharState, field: &dyn FieldSource, dt: f64) -> Result<CharState, CharError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CharError::InvalidStep(dt));
    }
    rk4_step(s, field, dt)
}

/// Integrates to `t_target` (either direction) with steps no longer than `dt_max`.
pub fn integrate_to(
    s: &CharState,
    field: &dyn FieldSource,
    t_target: f64,
    dt_max: f64,
) -> Result<CharState, CharError> {
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(CharError::InvalidStep(dt_max));
    }
    let span = t_target - s.t;
    let n = (span.abs() / dt_max).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    let mut cur = *s;
    for k in 0..n {
        cur = rk4_step(&cur, field, dt)?;
        if k + 1 == n {
            cur.t = t_target;
        }
    }
    Ok(cur)
}

/// Closed-form force-free flow over `dt`.
pub fn free_flow(s: &CharState, dt: f64) -> Result<CharState, CharError> {
    let w = s.v.norm();
    if !(w > 0.0 && w.is_finite()) {
        return Err(CharError::ZeroVelocity { t: s.t });
    }
    let tangent = s.tangent.map(|d| free_flow_tangent(&s.v, dt) * d);
    Ok(CharState {
        t: s.t + dt,
        x: s.x + s.v * (dt / w),
        v: s.v,
        tangent,
    })
}

/// `[[I, dt P(V)], [0, I]]`.
pub fn free_flow_tangent(v: &Vector3<f64>, dt: f64) -> Matrix6<f64> {
    let mut m = Matrix6::identity();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(projector(v) * dt));
    m
}

/// Time-ordered samples of a characteristic.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub states: Vec<CharState>,
}

impl Trajectory {
    /// Integrates `n_steps` forward steps, recording every state.
    pub fn integrate(start: CharState, field: &dyn FieldSource, dt: f64, n_steps: usize) -> Result<Self, CharError> {
        let mut states = Vec::with_capacity(n_steps + 1);
        states.push(start);
        let mut cur = start;
        for _ in 0..n_steps {
            cur = push(&cur, field, dt)?;
            states.push(cur);
        }
        Ok(Self { states })
    }

    pub fn min_speed(&self) -> Result<f64, CharError> {
        if self.states.is_empty() {
            return Err(CharError::EmptyTrajectory);
        }
        Ok(self.states.iter().map(|s| s.v.norm()).fold(f64::INFINITY, f64::min))
    }

    pub fn weight_series(&self, id: WeightId) -> Result<Vec<f64>, CharError> {
        self.states
            .iter()
            .map(|s| eval_weight(id, &s.point()).map_err(CharError::from))
            .collect()
    }

    /// CSV with columns `t,X1,X2,X3,V1,V2,V3,|V|,s,z`.
    pub fn to_csv(&self) -> Result<String, CharError> {
        let mut out = String::from("t,X1,X2,X3,V1,V2,V3,|V|,s,z\n");
        for st in &self.states {
            let p = st.point();
            let s = eval_weight(WeightId::S, &p)?;
            let z = eval_weight(WeightId::Z, &p)?;
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                st.t,
                st.x[0],
                st.x[1],
                st.x[2],
                st.v[0],
                st.v[1],
                st.v[2],
                st.v.norm(),
                s,
                z
            ));
        }
        Ok(out)
    }
}
