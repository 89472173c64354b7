//! The identity catalog and its certificate.

use super::expr::{Expr, Var};
use super::fieldop::FieldOp;
use super::fields::{
    force_term, radial_derivative, radial_velocity, rotation, spacetime_part, transport, transport_with_potential,
    velocity_gradient_x, FieldId,
};
use super::poly::q;
use super::weights::{weight_expr, WeightCatalog, WeightId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Proved,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub identity_id: String,
    pub group: String,
    pub status: Status,
    /// Human-readable outcome, e.g. the matched catalog member.
    pub detail: String,
    /// Nonzero residual when the entry failed.
    pub residual: Option<String>,
    pub residual_terms: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
    pub elapsed_seconds: f64,
}

impl CertificateReport {
    pub fn all_proved(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Proved)
    }

    pub fn count(&self, group: &str) -> (usize, usize) {
        let g: Vec<_> = self.entries.iter().filter(|e| e.group == group).collect();
        let proved = g.iter().filter(|e| e.status == Status::Proved).count();
        (proved, g.len())
    }

    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.group) {
                out.push(e.group.clone());
            }
        }
        out
    }

    /// Plain-text table, one line per identity.
    pub fn to_table(&self) -> String {
        let width = self.entries.iter().map(|e| e.identity_id.len()).max().unwrap_or(0);
        let mut s = String::new();
        for e in &self.entries {
            let status = match e.status {
                Status::Proved => "PROVED",
                Status::Failed => "FAILED",
            };
            let _ = writeln!(s, "{:<18} {:<width$}  {}  {}", e.group, e.identity_id, status, e.detail);
        }
        for g in self.groups() {
            let (p, n) = self.count(&g);
            let _ = writeln!(s, "{g}: {p}/{n} PROVED");
        }
        s
    }
}

fn entry_from_expr(id: String, group: &str, residual: Expr, detail: String) -> CertificateEntry {
    if residual.is_zero() {
        CertificateEntry {
            identity_id: id,
            group: group.to_string(),
            status: Status::Proved,
            detail,
            residual: None,
            residual_terms: 0,
        }
    } else {
        CertificateEntry {
            identity_id: id,
            group: group.to_string(),
            status: Status::Failed,
            detail,
            residual_terms: residual.term_count(),
            residual: Some(residual.to_string()),
        }
    }
}

fn entry_from_op(id: String, group: &str, residual: FieldOp, detail: String) -> CertificateEntry {
    if residual.is_zero() {
        CertificateEntry {
            identity_id: id,
            group: group.to_string(),
            status: Status::Proved,
            detail,
            residual: None,
            residual_terms: 0,
        }
    } else {
        CertificateEntry {
            identity_id: id,
            group: group.to_string(),
            status: Status::Failed,
            detail,
            residual_terms: residual.term_count(),
            residual: Some(residual.to_string()),
        }
    }
}

/// Classifies `e` as `0`, `+v0 w'` or `-v0 w'` for some `w'` in `k0`.
pub fn classify_membership(e: &Expr, catalog: &WeightCatalog) -> Option<String> {
    if e.is_zero() {
        return Some("0".to_string());
    }
    let w = Expr::w();
    for k in &catalog.k0 {
        let target = &w * &k.expr;
        if e.equals(&target) {
            return Some(format!("+v0*{}", k.id));
        }
        if e.equals(&-&target) {
            return Some(format!("-v0*{}", k.id));
        }
    }
    None
}

/// Test potential used to check the commuted-source formulas.
pub fn sample_potential() -> Expr {
    Expr::t() * Expr::x(1) * Expr::x(1)
        + Expr::x(2) * Expr::x(3)
        + Expr::t() * Expr::t() * Expr::x(3)
        + Expr::x(1) * Expr::x(2) * Expr::x(3).scale(&q(3))
}

type Job = Box<dyn Fn() -> CertificateEntry + Send + Sync>;

fn weight_jobs(jobs: &mut Vec<Job>) {
    for id in WeightId::K0.iter().copied().chain([WeightId::Morawetz]) {
        jobs.push(Box::new(move || {
            let r = transport().apply(&weight_expr(id));
            entry_from_expr(format!("T({id})=0"), "weight-preservation", r, String::new())
        }));
    }
}

fn membership_jobs(jobs: &mut Vec<Job>) {
    for z in FieldId::ALL {
        for id in WeightId::K0 {
            jobs.push(Box::new(move || {
                let catalog = WeightCatalog::new();
                let value = z.op().apply(&(Expr::w() * weight_expr(id)));
                let name = format!("{z}(v0*{id})");
                match classify_membership(&value, &catalog) {
                    Some(m) => CertificateEntry {
                        identity_id: name,
                        group: "membership".into(),
                        status: Status::Proved,
                        detail: format!("= {m}"),
                        residual: None,
                        residual_terms: 0,
                    },
                    None => CertificateEntry {
                        identity_id: name,
                        group: "membership".into(),
                        status: Status::Failed,
                        detail: "no match in +-v0*k0 or 0".into(),
                        residual_terms: value.term_count(),
                        residual: Some(value.to_string()),
                    },
                }
            }));
        }
    }
}

fn commutator_jobs(jobs: &mut Vec<Job>) {
    for z in FieldId::ALL {
        jobs.push(Box::new(move || {
            let t = transport();
            let c = t.commutator(&z.op());
            let (expected, label) = match z {
                FieldId::S => (t.clone(), "T"),
                FieldId::Sv => (-&t, "-T"),
                _ => (FieldOp::zero(), "0"),
            };
            entry_from_op(format!("[T,{z}]={label}"), "commutator", &c - &expected, String::new())
        }));
    }
}

fn null_jobs(jobs: &mut Vec<Job>) {
    let y12 = || FieldOp::from_terms([(Var::X(2), Expr::v(1)), (Var::X(1), -Expr::v(2))]);
    let v0z12 = || Expr::w() * weight_expr(WeightId::Z12);
    jobs.push(Box::new(move || {
        let lhs =
            &(&y12().scale(&Expr::x(3)) + &rotation(2, 3).scale(&Expr::v(1))) - &rotation(1, 3).scale(&Expr::v(2));
        let r = &lhs + &FieldOp::partial(Var::X(3)).scale(&v0z12());
        entry_from_op(
            "x3*Y12 + v1*Om23 - v2*Om13 + v0*z12*d3 = 0".into(),
            "null",
            r,
            String::new(),
        )
    }));
    jobs.push(Box::new(move || {
        let lhs = &y12().scale(&Expr::x(1)) - &rotation(1, 2).scale(&Expr::v(1));
        let r = &lhs + &FieldOp::partial(Var::X(1)).scale(&v0z12());
        entry_from_op("x1*Y12 - v1*Om12 + v0*z12*d1 = 0".into(), "null", r, String::new())
    }));
    jobs.push(Box::new(move || {
        let lhs = &y12().scale(&Expr::x(2)) - &rotation(1, 2).scale(&Expr::v(2));
        let r = &lhs + &FieldOp::partial(Var::X(2)).scale(&v0z12());
        entry_from_op("x2*Y12 - v2*Om12 + v0*z12*d2 = 0".into(), "null", r, String::new())
    }));
}

fn recover_jobs(jobs: &mut Vec<Job>) {
    jobs.push(Box::new(|| {
        let w = Expr::w();
        let t = Expr::t();
        let r2 = Expr::x(1) * Expr::x(1) + Expr::x(2) * Expr::x(2) + Expr::x(3) * Expr::x(3);
        let r = Expr::u();
        let vr = radial_velocity();
        let s = weight_expr(WeightId::S);
        let dt = FieldOp::partial(Var::T);
        let angular = &velocity_gradient_x() - &radial_derivative().scale(&vr);
        let mut acc = dt.scale(&(&w * &(&t * &t - &r2)));
        acc = &acc - &dt.scale(&(&w * &t * &s));
        acc = &acc - &FieldId::S.op().scale(&(&r * &vr));
        acc = &acc + &transport().scale(&r2);
        acc = &acc - &angular.scale(&r2);
        entry_from_op(
            "v0(t^2-r^2)dt - v0*t*s*dt - r*vr*S + r^2*T - r^2(v.dx - vr*dr) = 0".into(),
            "tau-minus-recovery",
            acc,
            String::new(),
        )
    }));
}

fn auxiliary_jobs(jobs: &mut Vec<Job>) {
    jobs.push(Box::new(|| {
        let c = rotation(1, 2).commutator(&FieldOp::partial(Var::X(1)));
        entry_from_op(
            "[Om12,d1]=-d2".into(),
            "auxiliary",
            &c + &FieldOp::partial(Var::X(2)),
            String::new(),
        )
    }));
    jobs.push(Box::new(|| {
        let z2 = weight_expr(WeightId::Z);
        let sum = WeightId::K0.iter().fold(Expr::zero(), |acc, &k| {
            let e = weight_expr(k);
            acc + &e * &e
        });
        entry_from_expr(
            "z^2 = sum of squares over k0".into(),
            "auxiliary",
            z2 - sum,
            String::new(),
        )
    }));
    jobs.push(Box::new(|| {
        // (t - r) dr = s dr + (vr/v0 - 1) S + s dt + (r - t)(vr/v0) dt
        let t = Expr::t();
        let r = Expr::u();
        let s = weight_expr(WeightId::S);
        let ratio = radial_velocity() * Expr::w().inv().expect("w");
        let dr = radial_derivative();
        let dt = FieldOp::partial(Var::T);
        let lhs = dr.scale(&(&t - &r));
        let rhs = &(&dr.scale(&s) + &FieldId::S.op().scale(&(&ratio - &Expr::one())))
            + &(&dt.scale(&s) + &dt.scale(&(&(&r - &t) * &ratio)));
        entry_from_op(
            "(t-r)dr = s*dr + (vr/v0-1)S + s*dt + (r-t)(vr/v0)dt".into(),
            "auxiliary",
            &lhs - &rhs,
            String::new(),
        )
    }));
    for sigma in [1i64, -1] {
        for z in FieldId::ALL {
            jobs.push(Box::new(move || {
                let phi = sample_potential();
                let tp = transport_with_potential(&phi, sigma);
                let c = tp.commutator(&z.op());
                let (expected, label) = match z {
                    FieldId::S => {
                        let sphi = spacetime_part(FieldId::S).apply(&phi);
                        (&tp + &force_term(&sphi, -sigma), "T_phi - sigma v0 grad(S phi).grad_v")
                    }
                    FieldId::Sv => (&(-&tp) + &force_term(&phi, sigma), "-T_phi + sigma v0 grad(phi).grad_v"),
                    other => {
                        let zphi = spacetime_part(other).apply(&phi);
                        (force_term(&zphi, -sigma), "-sigma v0 grad(Z phi).grad_v")
                    }
                };
                entry_from_op(
                    format!("[T_phi,{z}] sigma={sigma:+}"),
                    "commuted-source",
                    &c - &expected,
                    format!("= {label}"),
                )
            }));
        }
    }
}

/// The full ordered job list.
fn jobs() -> Vec<Job> {
    let mut jobs: Vec<Job> = Vec::new();
    weight_jobs(&mut jobs);
    membership_jobs(&mut jobs);
    commutator_jobs(&mut jobs);
    null_jobs(&mut jobs);
    recover_jobs(&mut jobs);
    auxiliary_jobs(&mut jobs);
    jobs
}

/// Runs every identity. Entries keep the fixed catalog order.
pub fn verify_identity_catalog() -> CertificateReport {
    let start = Instant::now();
    let entries: Vec<CertificateEntry> = jobs().par_iter().map(|j| j()).collect();
    CertificateReport {
        entries,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}
