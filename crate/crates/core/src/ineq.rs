//! Numerical harness for the weighted velocity-average inequality.
//!
//! Test functions are products `h1(|y|^2) h2(|v|) h3(y.v/|v|)` with `y = x - c t v/|v|`,
//! evaluated through truncated jets so that every word of at most three commutation
//! fields is available exactly.

use crate::error::IneqError;
use crate::jet::{apply_field_value, word_abs_sum, Jet};
use crate::phasegeom::{tau_minus, z_squared, PhasePoint};
use crate::quadrature::{gauss_legendre, gauss_legendre_on, integrate, QuadResult};
use crate::symkernel::FieldId;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Support of a test function: `|x - c t v/|v|| < radius`, `v_low < |v| < v_high`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub c: f64,
    pub radius: f64,
    pub v_low: f64,
    pub v_high: f64,
}

pub trait TestFunction: Sync {
    fn name(&self) -> &str;
    fn support(&self) -> Support;
    /// Jet of `g` at `p`.
    fn jet(&self, p: &PhasePoint, order: usize) -> Jet;
    /// Jet of `T(g) = |v| d_t g + v . grad_x g` at `p`.
    fn transport_jet(&self, p: &PhasePoint, order: usize) -> Jet;
    fn value(&self, p: &PhasePoint) -> f64 {
        self.jet(p, 0).value()
    }
}

/// `A (1 - |y|^2/R^2)^4 (4 (w - a)(b - w)/(b - a)^2)^4 (1 + kappa eta/R)`, `eta = y.v/|v|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpMember {
    pub name: String,
    pub c: f64,
    pub radius: f64,
    pub v_low: f64,
    pub v_high: f64,
    pub kappa: f64,
    pub amplitude: f64,
}

impl BumpMember {
    pub fn new(name: &str, c: f64, radius: f64, v_low: f64, v_high: f64, kappa: f64) -> Self {
        Self {
            name: name.to_string(),
            c,
            radius,
            v_low,
            v_high,
            kappa,
            amplitude: 1.0,
        }
    }

    fn base_jets(&self, p: &PhasePoint, order: usize) -> Option<BaseJets> {
        let w0 = p.v.norm();
        if !(w0 > self.v_low && w0 < self.v_high) {
            return None;
        }
        let y0 = p.x - p.v * (self.c * p.t / w0);
        if y0.norm_squared() >= self.radius * self.radius {
            return None;
        }
        let [t, x1, x2, x3, v1, v2, v3] = Jet::coordinates(order, p);
        let w = v1.mul(&v1).add(&v2.mul(&v2)).add(&v3.mul(&v3)).sqrt();
        let iw = w.recip();
        let ct = t.scale(self.c);
        let vh = [v1.mul(&iw), v2.mul(&iw), v3.mul(&iw)];
        let v = [v1, v2, v3];
        let y = [
            x1.sub(&ct.mul(&vh[0])),
            x2.sub(&ct.mul(&vh[1])),
            x3.sub(&ct.mul(&vh[2])),
        ];
        let q = y[0].mul(&y[0]).add(&y[1].mul(&y[1])).add(&y[2].mul(&y[2]));
        let eta = y[0].mul(&vh[0]).add(&y[1].mul(&vh[1])).add(&y[2].mul(&vh[2]));
        let yv = y[0].mul(&v[0]).add(&y[1].mul(&v[1])).add(&y[2].mul(&v[2]));
        let r2 = self.radius * self.radius;
        let s1 = q.scale(-1.0 / r2).add_const(1.0);
        let d = self.v_high - self.v_low;
        let s2 = w
            .add_const(-self.v_low)
            .mul(&w.scale(-1.0).add_const(self.v_high))
            .scale(4.0 / (d * d));
        let h2 = s2.powi(4);
        let h3 = eta.scale(self.kappa / self.radius).add_const(1.0);
        Some(BaseJets { w, yv, s1, h2, h3 })
    }
}

struct BaseJets {
    w: Jet,
    yv: Jet,
    s1: Jet,
    h2: Jet,
    h3: Jet,
}

impl TestFunction for BumpMember {
    fn name(&self) -> &str {
        &self.name
    }

    fn support(&self) -> Support {
        Support {
            c: self.c,
            radius: self.radius,
            v_low: self.v_low,
            v_high: self.v_high,
        }
    }

    fn jet(&self, p: &PhasePoint, order: usize) -> Jet {
        match self.base_jets(p, order) {
            None => Jet::zero(order),
            Some(b) => b.s1.powi(4).mul(&b.h2).mul(&b.h3).scale(self.amplitude),
        }
    }

    /// `T(y) = (1 - c) v` and `T(eta) = (1 - c)|v|`, so
    /// `T g = (1 - c)(2 h1'(q) y.v h2 h3 + h1 h2 h3' |v|)`.
    fn transport_jet(&self, p: &PhasePoint, order: usize) -> Jet {
        if self.c == 1.0 {
            return Jet::zero(order);
        }
        let b = match self.base_jets(p, order) {
            None => return Jet::zero(order),
            Some(b) => b,
        };
        let r2 = self.radius * self.radius;
        let h1p = b.s1.powi(3).scale(-4.0 / r2);
        let a = h1p.mul(&b.yv).mul(&b.h2).mul(&b.h3).scale(2.0);
        let c = b.s1.powi(4).mul(&b.h2).mul(&b.w).scale(self.kappa / self.radius);
        a.add(&c).scale((1.0 - self.c) * self.amplitude)
    }

    fn value(&self, p: &PhasePoint) -> f64 {
        let w = p.v.norm();
        if !(w > self.v_low && w < self.v_high) {
            return 0.0;
        }
        let vh = p.v / w;
        let y = p.x - vh * (self.c * p.t);
        let q = y.norm_squared() / (self.radius * self.radius);
        if q >= 1.0 {
            return 0.0;
        }
        let d = self.v_high - self.v_low;
        let s2 = 4.0 * (w - self.v_low) * (self.v_high - w) / (d * d);
        let h3 = 1.0 + self.kappa * y.dot(&vh) / self.radius;
        self.amplitude * (1.0 - q).powi(4) * s2.powi(4) * h3
    }
}

/// The identically vanishing function.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFunction;

impl TestFunction for ZeroFunction {
    fn name(&self) -> &str {
        "zero"
    }
    fn support(&self) -> Support {
        Support {
            c: 1.0,
            radius: 1.0,
            v_low: 2.0,
            v_high: 3.0,
        }
    }
    fn jet(&self, _p: &PhasePoint, order: usize) -> Jet {
        Jet::zero(order)
    }
    fn transport_jet(&self, _p: &PhasePoint, order: usize) -> Jet {
        Jet::zero(order)
    }
}

/// The registered family.
pub fn default_family() -> Vec<BumpMember> {
    vec![
        BumpMember::new("free-narrow", 1.0, 2.0, 2.0, 4.0, 0.0),
        BumpMember::new("free-wide-tilted", 1.0, 3.0, 2.0, 5.0, 0.5),
        BumpMember::new("half-speed", 0.5, 2.0, 2.0, 4.0, 0.0),
    ]
}

pub fn family_member(name: &str) -> Result<BumpMember, IneqError> {
    default_family()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| IneqError::UnknownMember(name.to_string()))
}

fn word_value(g: &dyn TestFunction, word: &[FieldId], p: &PhasePoint) -> f64 {
    let mut j = g.jet(p, word.len());
    for &id in word.iter().rev() {
        if j.order() == 1 {
            return apply_field_value(id, &j, p);
        }
        j = crate::jet::apply_field(id, &j, p);
    }
    j.value()
}

fn shifted(p: &PhasePoint, id: FieldId, h: f64) -> PhasePoint {
    let c = crate::phasegeom::field_coefficients(id, p);
    let q = p.coords();
    PhasePoint::new(
        q[0] + h * c[0],
        [q[1] + h * c[1], q[2] + h * c[2], q[3] + h * c[3]],
        [q[4] + h * c[4], q[5] + h * c[5], q[6] + h * c[6]],
    )
}

/// Fourth-order central difference of `f` along the direction of `id` at `p`.
fn along_field<F: Fn(&PhasePoint) -> f64>(p: &PhasePoint, id: FieldId, f: F) -> f64 {
    let c = crate::phasegeom::field_coefficients(id, p);
    let size = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = 1e-3 / (1.0 + size);
    let at = |s: f64| f(&shifted(p, id, s));
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

/// Outcome of the derivative gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub name: String,
    pub points: usize,
    pub checks: usize,
    pub max_rel_error: f64,
}

fn random_support_point(s: &Support, rng: &mut ChaCha8Rng) -> PhasePoint {
    let t: f64 = rng.random_range(0.0..10.0);
    let dir = |rng: &mut ChaCha8Rng| {
        let z: f64 = rng.random_range(-1.0..1.0);
        let ph: f64 = rng.random_range(0.0..TAU);
        let q = (1.0 - z * z).sqrt();
        Vector3::new(q * ph.cos(), q * ph.sin(), z)
    };
    let w = rng.random_range(s.v_low + 0.05 * (s.v_high - s.v_low)..s.v_high - 0.05 * (s.v_high - s.v_low));
    let vh = dir(rng);
    let y = dir(rng) * (0.9 * s.radius * rng.random::<f64>().cbrt());
    let x = y + vh * (s.c * t);
    PhasePoint { t, x, v: vh * w }
}

/// Compares every word of length one and two, a sample of words of length three and
/// `T(g)` with central differences of the next-lower derivative at `n_points` points.
pub fn derivative_gate(g: &dyn TestFunction, n_points: usize, seed: u64) -> Result<GateReport, IneqError> {
    let s = g.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(PhasePoint, [usize; 3])> = (0..n_points)
        .map(|_| {
            let p = random_support_point(&s, &mut rng);
            let pick = [rng.random_range(0..9), rng.random_range(0..9), rng.random_range(0..9)];
            (p, pick)
        })
        .collect();
    let check = |exact: f64, fd: f64, scale: f64| (exact - fd).abs() / (exact.abs().max(fd.abs()) + 1e-7 * scale);
    let results: Vec<(f64, usize)> = points
        .par_iter()
        .map(|(p, pick)| {
            let scale = word_abs_sum(&FieldId::ALL, &g.jet(p, 3), p, 3);
            let mut worst: f64 = 0.0;
            let mut count = 0;
            let mut record = |e: f64, f: f64| {
                worst = worst.max(check(e, f, scale));
                count += 1;
            };
            for a in FieldId::ALL {
                record(word_value(g, &[a], p), along_field(p, a, |q| g.value(q)));
                for b in FieldId::ALL {
                    record(word_value(g, &[a, b], p), along_field(p, a, |q| word_value(g, &[b], q)));
                }
            }
            for &k in pick {
                let a = FieldId::ALL[k];
                for b in FieldId::ALL {
                    for c in FieldId::ALL {
                        let fd = along_field(p, a, |q| word_value(g, &[b, c], q));
                        record(word_value(g, &[a, b, c], p), fd);
                    }
                }
            }
            let w = p.v.norm();
            let along = |s: f64| PhasePoint {
                t: p.t + s * w,
                x: p.x + p.v * s,
                v: p.v,
            };
            let h = 1e-3 / w;
            let f = |s: f64| g.value(&along(s));
            let fd = (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
            record(g.transport_jet(p, 0).value(), fd);
            (worst, count)
        })
        .collect();
    let max_rel_error = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let checks = results.iter().map(|r| r.1).sum();
    let report = GateReport {
        name: g.name().to_string(),
        points: n_points,
        checks,
        max_rel_error,
    };
    if max_rel_error > 1e-5 {
        return Err(IneqError::GateFailed {
            name: report.name,
            detail: format!("max relative error {max_rel_error:.3e} over {checks} checks"),
        });
    }
    Ok(report)
}

/// Absolute accuracy per unit velocity volume below which integrands count as roundoff.
pub const ABS_FLOOR: f64 = 1e-14;

/// `int f(t, x, v) dv` over the velocity support of `s`, in spherical coordinates
/// with the polar axis along `x/|x|`.
/// Panels are refined until the relative tolerance `tol` or the absolute floor is met.
pub fn velocity_integral<F>(s: &Support, t: f64, x: &Vector3<f64>, f: F, tol: f64) -> QuadResult
where
    F: Fn(&PhasePoint) -> f64,
{
    let r = x.norm();
    let axis = if r > 0.0 { x / r } else { Vector3::z() };
    let helper = if axis[0].abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (helper - axis * axis.dot(&helper)).normalize();
    let e2 = axis.cross(&e1);
    let ct = s.c * t;
    let (mu_lo, breaks) = if ct * r > 0.0 {
        let m = (r * r + ct * ct - s.radius * s.radius) / (2.0 * ct * r);
        if m >= 1.0 {
            return QuadResult {
                value: 0.0,
                error: 0.0,
                converged: true,
                panels: 0,
            };
        }
        (m.max(-1.0), vec![])
    } else if r * r + ct * ct >= s.radius * s.radius {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            converged: true,
            panels: 0,
        };
    } else {
        (-1.0, vec![])
    };
    let point = |w: f64, mu: f64, ph: f64| {
        let st = (1.0 - mu * mu).max(0.0).sqrt();
        let vh = axis * mu + (e1 * ph.cos() + e2 * ph.sin()) * st;
        f(&PhasePoint { t, x: *x, v: vh * w })
    };
    let (gx, gw) = gauss_legendre(8);
    let (dw, dmu) = (s.v_high - s.v_low, 1.0 - mu_lo);
    let mut scale = 0.0;
    for (a, wa) in gx.iter().zip(&gw) {
        let w = s.v_low + 0.5 * dw * (a + 1.0);
        for (b, wb) in gx.iter().zip(&gw) {
            let mu = mu_lo + 0.5 * dmu * (b + 1.0);
            for (c, wc) in gx.iter().zip(&gw) {
                let ph = PI * (c + 1.0);
                scale += wa * wb * wc * w * w * point(w, mu, ph).abs();
            }
        }
    }
    scale *= 0.125 * dw * dmu * TAU;
    let shell = 4.0 * PI * (s.v_high.powi(3) - s.v_low.powi(3)) / 3.0;
    let outer_abs = (tol * scale).max(ABS_FLOOR * shell);
    let mid_abs = outer_abs / (dw * s.v_high * s.v_high);
    let inner_abs = mid_abs / dmu;
    let mut converged = true;
    let mut error = 0.0;
    let outer = integrate(
        |w| {
            let mid = integrate(
                |mu| {
                    let inner = integrate(|ph| point(w, mu, ph), 0.0, TAU, &[], tol, inner_abs, 200);
                    converged &= inner.converged;
                    inner.value
                },
                mu_lo,
                1.0,
                &breaks,
                tol,
                mid_abs,
                400,
            );
            converged &= mid.converged;
            error += mid.error;
            mid.value * w * w
        },
        s.v_low,
        s.v_high,
        &[],
        tol,
        outer_abs,
        200,
    );
    QuadResult {
        value: outer.value,
        error: outer.error + error,
        converged: converged && outer.converged,
        panels: outer.panels,
    }
}

/// `int |g|(t, x, v) dv`.
pub fn lhs(g: &dyn TestFunction, t: f64, x: &Vector3<f64>, tol: f64) -> QuadResult {
    velocity_integral(&g.support(), t, x, |p| g.value(p).abs(), tol)
}

/// Quadrature resolution of the phase-space integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhsConfig {
    /// Nodes per dimension on the finer level; the coarse level uses two fewer.
    pub level: usize,
    pub tol: f64,
    /// Orientation of the quadrature frame.
    pub frame: Matrix3<f64>,
    /// Longest commutator word in the second sum.
    pub max_order: usize,
}

impl Default for RhsConfig {
    fn default() -> Self {
        Self {
            level: 6,
            tol: 1e-4,
            frame: Matrix3::identity(),
            max_order: 3,
        }
    }
}

/// Both right-hand sums for one weight power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsValue {
    pub p: u32,
    pub transport_sum: f64,
    pub commuted_sum: f64,
    pub total: f64,
    /// Difference between the two quadrature levels.
    pub error: f64,
    pub converged: bool,
}

/// Integrand pieces at one phase-space point.
struct PointTerms {
    /// `r sum_beta |Om^beta T g| / |v|`.
    transport: f64,
    /// `sum_xi |Z^xi g|`.
    commuted: f64,
    z: f64,
    s: f64,
}

fn point_terms(g: &dyn TestFunction, p: &PhasePoint, max_order: usize) -> Option<PointTerms> {
    let j = g.jet(p, max_order);
    let tj = g.transport_jet(p, 2);
    if j.is_zero() && tj.is_zero() {
        return None;
    }
    let commuted = word_abs_sum(&FieldId::ALL, &j, p, max_order);
    let transport = if tj.is_zero() {
        0.0
    } else {
        p.radius() * word_abs_sum(&FieldId::ROTATIONS, &tj, p, 2) / p.v.norm()
    };
    Some(PointTerms {
        transport,
        commuted,
        z: z_squared(p).ok()?.sqrt(),
        s: p.t - p.x.dot(&p.v) / p.v.norm(),
    })
}

fn weighted(terms: &PointTerms, p: u32) -> (f64, f64) {
    if p == 0 {
        (terms.transport, (1.0 + terms.s.abs()) * terms.commuted)
    } else {
        (
            terms.z.powi(p as i32) * terms.transport,
            terms.z.powi(p as i32 + 1) * terms.commuted,
        )
    }
}

/// Product Gauss rule over `|y| < R` and the velocity shell, `x = y + c t v/|v|`.
fn rhs_level(g: &dyn TestFunction, t: f64, ps: &[u32], n: usize, cfg: &RhsConfig) -> Vec<(f64, f64)> {
    let s = g.support();
    let rad = gauss_legendre_on(n, 0.0, s.radius);
    let spd = gauss_legendre_on(n, s.v_low, s.v_high);
    let cosines = gauss_legendre_on(n, -1.0, 1.0);
    let phis: Vec<(f64, f64)> = (0..n)
        .map(|k| ((k as f64 + 0.5) * TAU / n as f64, TAU / n as f64))
        .collect();
    let dirs: Vec<(Vector3<f64>, f64)> = cosines
        .iter()
        .flat_map(|&(c, wc)| {
            let st = (1.0 - c * c).sqrt();
            phis.iter()
                .map(move |&(ph, wp)| (Vector3::new(st * ph.cos(), st * ph.sin(), c), wc * wp))
        })
        .map(|(d, w)| (cfg.frame * d, w))
        .collect();
    let outer: Vec<(usize, usize)> = (0..rad.len())
        .flat_map(|i| (0..dirs.len()).map(move |j| (i, j)))
        .collect();
    let parts: Vec<Vec<(f64, f64)>> = outer
        .par_iter()
        .map(|&(i, j)| {
            let (rho, wr) = rad[i];
            let (dy, wy) = dirs[j];
            let y = dy * rho;
            let mut acc = vec![(0.0, 0.0); ps.len()];
            for &(w, ws) in &spd {
                for &(dv, wv) in &dirs {
                    let p = PhasePoint {
                        t,
                        x: y + dv * (s.c * t),
                        v: dv * w,
                    };
                    if let Some(terms) = point_terms(g, &p, cfg.max_order) {
                        let wt = wr * rho * rho * wy * ws * w * w * wv;
                        for (k, &pw) in ps.iter().enumerate() {
                            let (a, b) = weighted(&terms, pw);
                            acc[k].0 += wt * a;
                            acc[k].1 += wt * b;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0.0); ps.len()];
    for part in parts {
        for (t, a) in total.iter_mut().zip(part) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    total
}

/// Right-hand sides of the inequality at time `t` for each power in `ps`.
///
/// `p = 0` uses the `(1 + |s|)` weight; `p > 0` uses `z^p` and `z^{p+1}`.
pub fn rhs(g: &dyn TestFunction, t: f64, ps: &[u32], cfg: &RhsConfig) -> Vec<RhsValue> {
    let fine = rhs_level(g, t, ps, cfg.level, cfg);
    let coarse = rhs_level(g, t, ps, cfg.level.saturating_sub(2).max(2), cfg);
    ps.iter()
        .zip(fine.iter().zip(&coarse))
        .map(|(&p, (f, c))| {
            let total = f.0 + f.1;
            let error = (total - (c.0 + c.1)).abs();
            RhsValue {
                p,
                transport_sum: f.0,
                commuted_sum: f.1,
                total,
                error,
                converged: error <= cfg.tol * total.abs(),
            }
        })
        .collect()
}

/// Radii of the supremum grid: `(t + 51)^(i/199) - 1` for `i = 0..200` and `r = t`.
pub fn x_grid(t: f64) -> Vec<f64> {
    let mut r: Vec<f64> = (0..200).map(|i| (t + 51.0).powf(i as f64 / 199.0) - 1.0).collect();
    r.push(t);
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub member: String,
    pub t: f64,
    pub p: u32,
    pub sup_r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// The transport part of `rhs`.
    pub transport_sum: f64,
    pub ratio: Option<f64>,
    pub rhs_error: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub rows: Vec<ScanRow>,
    /// `(p, t, max ratio over members)`.
    pub family_max: Vec<(u32, f64, f64)>,
    /// `max_t / min_t` of the family maximum, per `p`.
    pub variation: Vec<(u32, f64)>,
}

impl InequalityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("member,t,p,sup_r,lhs,rhs,transport_sum,ratio,rhs_error,converged\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{}\n",
                r.member,
                r.t,
                r.p,
                r.sup_r,
                r.lhs,
                r.rhs,
                r.transport_sum,
                r.ratio.map(|x| format!("{x:.17e}")).unwrap_or_default(),
                r.rhs_error,
                r.converged
            ));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub lhs_tol: f64,
    pub rhs: RhsConfig,
    /// Direction of the `x` grid.
    pub direction: Vector3<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lhs_tol: 1e-6,
            rhs: RhsConfig::default(),
            direction: Vector3::z(),
        }
    }
}

/// `max_x lhs (1 + |x|)^2 tau_-^(1+p) / rhs` for each member, time and power.
pub fn constant_scan(
    family: &[&dyn TestFunction],
    times: &[f64],
    ps: &[u32],
    cfg: &ScanConfig,
) -> Result<InequalityReport, IneqError> {
    if family.is_empty() {
        return Err(IneqError::InvalidParameter("empty test family".into()));
    }
    let dir = cfg.direction.normalize();
    let mut rows = Vec::new();
    for g in family {
        for &t in times {
            let rhs_values = rhs(*g, t, ps, &cfg.rhs);
            let radii = x_grid(t);
            let lhs_values: Vec<f64> = radii
                .par_iter()
                .map(|r| lhs(*g, t, &(dir * *r), cfg.lhs_tol).value)
                .collect();
            for rv in &rhs_values {
                let mut best = (0.0, 0.0, f64::NEG_INFINITY);
                for (r, l) in radii.iter().zip(&lhs_values) {
                    let weighted = l * (1.0 + r).powi(2) * tau_minus(t, *r).powi(1 + rv.p as i32);
                    if weighted > best.2 {
                        best = (*r, *l, weighted);
                    }
                }
                let ratio = if rv.total == 0.0 { None } else { Some(best.2 / rv.total) };
                rows.push(ScanRow {
                    member: g.name().to_string(),
                    t,
                    p: rv.p,
                    sup_r: best.0,
                    lhs: best.1,
                    rhs: rv.total,
                    transport_sum: rv.transport_sum,
                    ratio,
                    rhs_error: rv.error,
                    converged: rv.converged,
                });
            }
        }
    }
    let mut family_max = Vec::new();
    let mut variation = Vec::new();
    for &p in ps {
        let mut per_t = Vec::new();
        for &t in times {
            let m = rows
                .iter()
                .filter(|r| r.p == p && r.t == t)
                .filter_map(|r| r.ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            if m.is_finite() {
                family_max.push((p, t, m));
                per_t.push(m);
            }
        }
        if !per_t.is_empty() {
            let hi = per_t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = per_t.iter().cloned().fold(f64::INFINITY, f64::min);
            variation.push((p, hi / lo));
        }
    }
    Ok(InequalityReport {
        rows,
        family_max,
        variation,
    })
}

/// `max_x (|Z int |g| dv| - int |Z^ g| dv)_+` over the radii `radii` along `direction`.
///
/// `Z` acts on the velocity average by central differences in `(t, x)`.
pub fn average_commute_check(
    g: &dyn TestFunction,
    id: FieldId,
    t: f64,
    radii: &[f64],
    direction: &Vector3<f64>,
    tol: f64,
) -> f64 {
    let dir = direction.normalize();
    let s = g.support();
    let h = 1e-3;
    radii
        .par_iter()
        .map(|r| {
            let p = PhasePoint {
                t,
                x: dir * *r,
                v: Vector3::new(0.0, 0.0, 1.0),
            };
            let c = crate::phasegeom::field_coefficients(id, &p);
            let avg = |sg: f64| {
                let x = p.x + Vector3::new(c[1], c[2], c[3]) * sg;
                lhs(g, t + c[0] * sg, &x, tol).value
            };
            let z_avg = (avg(h) - avg(-h)) / (2.0 * h);
            let lifted = velocity_integral(&s, t, &p.x, |q| apply_field_value(id, &g.jet(q, 1), q).abs(), tol).value;
            (z_avg.abs() - lifted).max(0.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// Fit of `|v.grad g - v^r d_r g|/|v| <= C r^-1 sum |z_ij| |grad_x g|` on random samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularFit {
    pub samples: usize,
    pub constant: f64,
}

pub fn angular_part_fit(g: &dyn TestFunction, n: usize, seed: u64) -> AngularFit {
    let s = g.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constant: f64 = 0.0;
    let mut used = 0;
    for _ in 0..n {
        let p = random_support_point(&s, &mut rng);
        let r = p.radius();
        if r == 0.0 {
            continue;
        }
        let j = g.jet(&p, 1);
        let c = j.coefficients();
        let grad = Vector3::new(c[2], c[3], c[4]);
        let w = p.v.norm();
        let xh = p.x / r;
        let lhs = (p.v.dot(&grad) - p.v.dot(&xh) * xh.dot(&grad)).abs() / w;
        let zsum: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| ((p.x[a] * p.v[b] - p.x[b] * p.v[a]) / w).abs())
            .sum();
        let rhs = zsum * grad.norm() / r;
        if rhs > 0.0 {
            constant = constant.max(lhs / rhs);
            used += 1;
        }
    }
    AngularFit {
        samples: used,
        constant,
    }
}

/// Coarse Monte-Carlo estimate of `int int (1 + |s|) |g|` over the support at time `t`.
pub fn monte_carlo_weighted_mass(g: &dyn TestFunction, t: f64, n: usize, seed: u64) -> (f64, f64) {
    let s = g.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = 4.0 / 3.0 * PI * s.radius.powi(3) * 4.0 / 3.0 * PI * (s.v_high.powi(3) - s.v_low.powi(3));
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let y = loop {
            let c = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if c.norm_squared() < 1.0 {
                break c * s.radius;
            }
        };
        let v = loop {
            let c = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ) * s.v_high;
            let w = c.norm();
            if w > s.v_low && w < s.v_high {
                break c;
            }
        };
        let vh = v / v.norm();
        let p = PhasePoint {
            t,
            x: y + vh * (s.c * t),
            v,
        };
        let sw = p.t - p.x.dot(&vh);
        let f = (1.0 + sw.abs()) * g.value(&p).abs();
        sum += f;
        sq += f * f;
    }
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean).max(0.0);
    (vol * mean, vol * (var / n as f64).sqrt())
}
