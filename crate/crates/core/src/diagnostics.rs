//! Commuted derivatives through the tangent flow, weighted norms and decay statistics.

use crate::characteristics::{integrate_to, radial_force, CharState, FieldSource};
use crate::error::SimError;
use crate::phasegeom::{chi, field_coefficients, tau_minus, z_squared, PhasePoint};
use crate::poisson::{RadialField, RadialGrid};
use crate::quadrature::{gauss_legendre_on, integrate};
use crate::reduce::chunked_fold;
use crate::sim::{InitialData, ParticleEnsemble};
use crate::symkernel::FieldId;
use nalgebra::{Vector3, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Phase-space direction `e` with `Z f = grad_{x,v} f . e` for a solution of the transport
/// equation with force `force` at the point.
///
/// The `dt` component of `Z` is traded for `-(V/|V|, chi F)` using the equation.
pub fn effective_direction(id: FieldId, p: &PhasePoint, force: &Vector3<f64>) -> Vector6<f64> {
    let c = field_coefficients(id, p);
    let w = p.v.norm();
    let drift = p.v / w;
    let kick = force * chi(w);
    Vector6::new(
        c[1] - c[0] * drift[0],
        c[2] - c[0] * drift[1],
        c[3] - c[0] * drift[2],
        c[4] - c[0] * kick[0],
        c[5] - c[0] * kick[1],
        c[6] - c[0] * kick[2],
    )
}

/// `Z f (t, x, v)` by integrating back to `t = 0` with the tangent flow.
pub fn commuted_value(
    id: FieldId,
    p: &PhasePoint,
    field: &dyn FieldSource,
    init: &InitialData,
    dt_max: f64,
) -> Result<f64, SimError> {
    let start = CharState {
        t: p.t,
        x: p.x,
        v: p.v,
        tangent: None,
    }
    .with_tangent();
    let end = integrate_to(&start, field, 0.0, dt_max)?;
    let back = end.tangent.expect("tangent");
    let e = effective_direction(id, p, &field.force(p.t, &p.x));
    Ok(init.grad_f0(&end.x, &end.v).dot(&(back * e)))
}

/// `f(t, x, v) = f0` at the foot of the backward characteristic.
pub fn value(p: &PhasePoint, field: &dyn FieldSource, init: &InitialData, dt_max: f64) -> Result<f64, SimError> {
    let start = CharState {
        t: p.t,
        x: p.x,
        v: p.v,
        tangent: None,
    };
    let end = integrate_to(&start, field, 0.0, dt_max)?;
    Ok(init.f0(&end.x, &end.v))
}

/// `Z f` at particle `i`, through the inverse of its forward tangent.
pub fn particle_commuted_value(
    ens: &ParticleEnsemble,
    i: usize,
    id: FieldId,
    field: &RadialField,
    sigma: f64,
) -> Result<f64, SimError> {
    let tan = ens.tangent.as_ref().ok_or(SimError::MissingTangents)?;
    let x = ens.x[i];
    let p = PhasePoint {
        t: ens.t,
        x,
        v: ens.v[i],
    };
    let (e, de) = field.field_at(x.norm());
    let (force, _) = radial_force(sigma, e, de, &x);
    let dir = effective_direction(id, &p, &force);
    let lu = tan[i].lu();
    let y = lu
        .solve(&dir)
        .ok_or_else(|| SimError::InvalidParameter(format!("tangent of particle {i} is singular")))?;
    Ok(ens.grad_f0[i].dot(&y))
}

/// Monte-Carlo estimate of a weighted `L^1` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyNormEstimate {
    pub order: u32,
    pub power: u32,
    pub value: f64,
    pub std_error: f64,
}

/// `sum_{|xi| <= M} int int z^n |Z^xi f|`, estimated by `sum_p |omega_p| z^n |Z^xi f|/|f0(p)|`.
///
/// Only the commuted-derivative sum is computed; orders above one are not supported.
pub fn energy_norm(
    ens: &ParticleEnsemble,
    field: &RadialField,
    sigma: f64,
    power: u32,
    order: u32,
) -> Result<EnergyNormEstimate, SimError> {
    if order > 1 {
        return Err(SimError::InvalidParameter(format!(
            "norm order {order} is not supported"
        )));
    }
    if order == 1 && ens.tangent.is_none() {
        return Err(SimError::MissingTangents);
    }
    if let Some(index) = ens.f0.iter().position(|f| *f == 0.0) {
        return Err(SimError::ZeroDensitySample { index });
    }
    let n = ens.len();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = PhasePoint {
                t: ens.t,
                x: ens.x[i],
                v: ens.v[i],
            };
            let z = z_squared(&p)?.sqrt();
            let mut g = 1.0;
            if order == 1 {
                for id in FieldId::ALL {
                    g += (particle_commuted_value(ens, i, id, field, sigma)? / ens.f0[i]).abs();
                }
            }
            Ok(ens.weight[i].abs() * z.powi(power as i32) * g)
        })
        .collect::<Result<_, SimError>>()?;
    let s = chunked_fold(n, 2, |i, acc| {
        acc[0] += terms[i];
        acc[1] += terms[i] * terms[i];
    });
    let mean = s[0] / n as f64;
    let var = if n > 1 {
        ((s[1] / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EnergyNormEstimate {
        order,
        power,
        value: s[0],
        std_error: (var * n as f64).sqrt(),
    })
}

/// Shell-binned `int f dv` on the grid nodes; identical to the deposited density.
pub fn moment_profile(ens: &ParticleEnsemble, grid: &RadialGrid) -> Vec<f64> {
    ens.deposit(grid).rho
}

/// `sup_r (1 + r)^2 tau_-^2 mu(r)` over the grid nodes.
pub fn moment_decay_statistic(grid: &RadialGrid, mu: &[f64], t: f64) -> f64 {
    mu.iter()
        .enumerate()
        .map(|(j, m)| {
            let r = grid.node(j);
            (1.0 + r).powi(2) * tau_minus(t, r).powi(2) * m.abs()
        })
        .fold(0.0, f64::max)
}

/// `int f0(x - t v/|v|, v) dv` at `|x| = r` by quadrature.
///
/// With `x = r e_3` and `mu = cos(angle(e_3, v))`, the integrand depends on `mu` and `|v|`
/// only, so the velocity integral factorises into a speed integral and a `mu` integral.
pub fn free_stream_average(init: &InitialData, t: f64, r: f64) -> f64 {
    let speed: f64 = gauss_legendre_on(16, init.v_low, init.v_high)
        .iter()
        .map(|(w, q)| q * init.b(*w) * w * w)
        .sum();
    let big_r = init.radius;
    let k = init.kappa / big_r;
    let f = |mu: f64| {
        let d2 = (r * r + t * t - 2.0 * r * t * mu).max(0.0);
        init.a(d2.sqrt()) * (1.0 + k * (r * mu - t))
    };
    let (lo, hi) = if r * t > 0.0 {
        let m = ((r * r + t * t - big_r * big_r) / (2.0 * r * t)).max(-1.0);
        if m >= 1.0 {
            return 0.0;
        }
        (m, 1.0)
    } else if r * r + t * t >= big_r * big_r {
        return 0.0;
    } else {
        (-1.0, 1.0)
    };
    let angular = integrate(f, lo, hi, &[], 1e-12, 1e-300, 2000).value;
    init.amplitude() * 2.0 * PI * speed * angular
}

/// Snapshot of a velocity average on a radial grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSnapshot {
    pub t: f64,
    pub r: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    /// `sup_r mu(r, t)`.
    pub peak: Vec<f64>,
    /// `D(t) = sup_r (1 + r)^2 tau_-^2 mu(r, t)`.
    pub weighted: Vec<f64>,
    pub max_ratio_to_first: f64,
    pub spread: f64,
    /// Least-squares slope of `log sup_r mu` against `log t`.
    pub slope: f64,
}

pub fn decay_fit(series: &[MomentSnapshot]) -> Result<DecayReport, SimError> {
    if series.len() < 3 {
        return Err(SimError::InvalidParameter(format!(
            "decay fit needs at least 3 snapshots, got {}",
            series.len()
        )));
    }
    let mut times = Vec::new();
    let mut peak = Vec::new();
    let mut weighted = Vec::new();
    for s in series {
        times.push(s.t);
        peak.push(s.mu.iter().fold(0.0_f64, |a, m| a.max(m.abs())));
        weighted.push(
            s.r.iter()
                .zip(&s.mu)
                .map(|(r, m)| (1.0 + r).powi(2) * tau_minus(s.t, *r).powi(2) * m.abs())
                .fold(0.0, f64::max),
        );
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&peak)
        .filter(|(t, p)| **t > 0.0 && **p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let max = weighted.iter().cloned().fold(0.0, f64::max);
    let min = weighted.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DecayReport {
        max_ratio_to_first: max / weighted[0],
        spread: max / min,
        slope,
        times,
        peak,
        weighted,
    })
}

/// Free-streaming velocity average on `samples` radii around the light cone `r = t`.
pub fn free_stream_snapshot(init: &InitialData, t: f64, samples: usize) -> MomentSnapshot {
    let lo = (t - 2.0 * init.radius).max(0.0);
    let hi = t + 2.0 * init.radius;
    let r: Vec<f64> = (0..samples)
        .map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64)
        .collect();
    let mu = r.par_iter().map(|r| free_stream_average(init, t, *r)).collect();
    MomentSnapshot { t, r, mu }
}

/// `|sum_p omega_p (S f / f0)(p) + 3 Q| / |Q|`.
pub fn charge_identity_check(ens: &ParticleEnsemble, field: &RadialField, sigma: f64) -> Result<f64, SimError> {
    let n = ens.len();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| Ok(ens.weight[i] * particle_commuted_value(ens, i, FieldId::S, field, sigma)? / ens.f0[i]))
        .collect::<Result<_, SimError>>()?;
    let s = chunked_fold(n, 1, |i, acc| acc[0] += terms[i])[0];
    let q = ens.total_charge();
    Ok((s + 3.0 * q).abs() / q.abs())
}

/// The same residual with `int int x . grad_x f0` computed by quadrature.
pub fn charge_identity_oracle(init: &InitialData) -> f64 {
    (init.scaling_moment_quadrature() + 3.0 * init.total_charge()).abs() / init.total_charge()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{free_flow, ZeroField};
    use approx::assert_relative_eq;

    #[test]
    fn commuted_value_at_time_zero_is_direct() {
        let init = InitialData {
            kappa: 0.3,
            ..InitialData::default()
        };
        let p = PhasePoint::new(0.0, [0.4, -0.2, 0.9], [1.0, 2.5, -1.1]);
        let g = init.grad_f0(&p.x, &p.v);
        let got = commuted_value(FieldId::D2, &p, &ZeroField, &init, 0.1).unwrap();
        assert_relative_eq!(got, g[1], max_relative = 1e-14);
    }

    #[test]
    fn free_translation_is_chain_rule() {
        let init = InitialData::default();
        let t = 3.0;
        let x0 = Vector3::new(0.4, -0.2, 0.9);
        let v = Vector3::new(1.0, 2.5, -1.1);
        let s = free_flow(&CharState::new(0.0, x0.into(), v.into()), t).unwrap();
        let p = s.point();
        let got = commuted_value(FieldId::D1, &p, &ZeroField, &init, 0.05).unwrap();
        assert_relative_eq!(got, init.grad_f0(&x0, &v)[0], max_relative = 1e-10);
    }

    #[test]
    fn rotations_vanish_on_symmetric_data() {
        let init = InitialData::default();
        let p = PhasePoint::new(2.0, [0.4, -0.2, 2.1], [1.0, 2.5, -1.1]);
        for id in FieldId::ROTATIONS {
            let got = commuted_value(id, &p, &ZeroField, &init, 0.05).unwrap();
            assert!(got.abs() < 1e-12 * init.amplitude(), "{id:?}: {got}");
        }
    }

    #[test]
    fn free_stream_average_at_time_zero() {
        let init = InitialData::default();
        let r = 0.7;
        let expect = init.amplitude() * init.a(r) * init.b_mass();
        assert_relative_eq!(free_stream_average(&init, 0.0, r), expect, max_relative = 1e-10);
    }

    #[test]
    fn static_data_ratio_is_one() {
        let s = MomentSnapshot {
            t: 0.0,
            r: vec![0.0, 1.0],
            mu: vec![1.0, 0.5],
        };
        let rep = decay_fit(&[s.clone(), s.clone(), s]).unwrap();
        assert_eq!(rep.max_ratio_to_first, 1.0);
    }

    #[test]
    fn oracle_residual_vanishes() {
        assert!(charge_identity_oracle(&InitialData::default()) < 1e-12);
    }
}
