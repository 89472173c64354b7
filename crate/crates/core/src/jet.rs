//! Truncated Taylor jets in the phase-space coordinates `(t, x1, x2, x3, v1, v2, v3)`.
//!
//! A jet of order `k` at a point `p` stores the coefficients `c_a` of
//! `g(p + d) = sum_{|a| <= k} c_a d^a + O(|d|^{k+1})`, graded by total degree so that
//! the order-`j` truncation is a prefix.

use crate::phasegeom::PhasePoint;
use crate::symkernel::FieldId;
use std::collections::HashMap;
use std::sync::OnceLock;

pub const JET_VARS: usize = 7;
pub const MAX_ORDER: usize = 3;
/// Storage size, a power of two so that masked indices need no bounds checks.
const FULL: usize = 128;

type Mono = [u8; JET_VARS];

struct Tables {
    monos: Vec<Mono>,
    /// Number of monomials of degree `<= k`.
    prefix: [usize; MAX_ORDER + 2],
    /// `by_left[k][i]`: pairs `(j, l)` with `mono[i] + mono[j] = mono[l]` and `deg l <= k`.
    by_left: Vec<Vec<Vec<(u16, u16)>>>,
    /// `shift[v]`: `(src, dst)` with `x_v x^src = x^dst`.
    shift: Vec<Vec<(u16, u16)>>,
    /// `deriv[v]`: `(src, dst, factor)` with `d/dx_v (x^src) = factor x^dst`.
    deriv: Vec<Vec<(u16, u16, f64)>>,
}

fn degree(m: &Mono) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos: Vec<Mono> = Vec::new();
        fn rec(pos: usize, left: usize, cur: &mut Mono, out: &mut Vec<Mono>) {
            if pos == JET_VARS {
                out.push(*cur);
                return;
            }
            for e in 0..=left {
                cur[pos] = e as u8;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, MAX_ORDER, &mut [0; JET_VARS], &mut monos);
        monos.sort_by(|a, b| degree(a).cmp(&degree(b)).then(b.cmp(a)));
        let index: HashMap<Mono, usize> = monos.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut prefix = [0; MAX_ORDER + 2];
        for (k, p) in prefix.iter_mut().enumerate().skip(1) {
            *p = monos.iter().filter(|m| degree(m) < k).count();
        }
        let by_left = (0..=MAX_ORDER)
            .map(|order| {
                monos
                    .iter()
                    .map(|a| {
                        monos
                            .iter()
                            .enumerate()
                            .filter(|(_, b)| degree(a) + degree(b) <= order)
                            .map(|(j, b)| {
                                let mut c = [0u8; JET_VARS];
                                for v in 0..JET_VARS {
                                    c[v] = a[v] + b[v];
                                }
                                (j as u16, index[&c] as u16)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let shift = (0..JET_VARS)
            .map(|v| {
                monos
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| degree(m) < MAX_ORDER)
                    .map(|(s, m)| {
                        let mut d = *m;
                        d[v] += 1;
                        (s as u16, index[&d] as u16)
                    })
                    .collect()
            })
            .collect();
        let deriv = (0..JET_VARS)
            .map(|v| {
                monos
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m[v] > 0)
                    .map(|(s, m)| {
                        let mut d = *m;
                        d[v] -= 1;
                        (s as u16, index[&d] as u16, m[v] as f64)
                    })
                    .collect()
            })
            .collect();
        Tables {
            monos,
            prefix,
            by_left,
            shift,
            deriv,
        }
    })
}

/// Number of coefficients of an order-`k` jet.
pub fn jet_len(order: usize) -> usize {
    tables().prefix[order + 1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; FULL],
}

impl Jet {
    pub fn constant(order: usize, a: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order above {MAX_ORDER}");
        let mut c = [0.0; FULL];
        c[0] = a;
        Self { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(order, 0.0)
    }

    /// The coordinate `var` expanded at the value `a`.
    pub fn variable(order: usize, var: usize, a: f64) -> Self {
        let mut j = Self::constant(order, a);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Coordinate jets of `p`.
    pub fn coordinates(order: usize, p: &PhasePoint) -> [Jet; JET_VARS] {
        let q = p.coords();
        std::array::from_fn(|k| Self::variable(order, k, q[k]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c[..jet_len(self.order)]
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().iter().all(|x| *x == 0.0)
    }

    /// The partial derivative `d^a g` at the expansion point, `a! c_a`.
    pub fn partial(&self, a: [u8; JET_VARS]) -> f64 {
        let t = tables();
        let d = degree(&a);
        if d > self.order {
            return f64::NAN;
        }
        let k = t.monos[..jet_len(self.order)]
            .iter()
            .position(|m| *m == a)
            .expect("monomial");
        let fact: f64 = a.iter().map(|&e| (1..=e as u32).product::<u32>() as f64).product();
        fact * self.c[k]
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; FULL];
        let n = jet_len(order);
        c[..n].copy_from_slice(&self.c[..n]);
        Self { order, c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for x in &mut r.c[..jet_len(self.order)] {
            *x *= s;
        }
        r
    }

    pub fn add_const(&self, a: f64) -> Self {
        let mut r = *self;
        r.c[0] += a;
        r
    }

    pub fn add(&self, o: &Jet) -> Self {
        let mut r = self.truncate(o.order);
        for (a, b) in r.c[..jet_len(r.order)].iter_mut().zip(&o.c) {
            *a += b;
        }
        r
    }

    pub fn sub(&self, o: &Jet) -> Self {
        let mut r = self.truncate(o.order);
        for (a, b) in r.c[..jet_len(r.order)].iter_mut().zip(&o.c) {
            *a -= b;
        }
        r
    }

    pub fn mul(&self, o: &Jet) -> Self {
        let order = self.order.min(o.order);
        let t = tables();
        let n = jet_len(order);
        let mut c = [0.0; FULL];
        for (i, &a) in self.c[..n].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(j, k) in &t.by_left[order][i] {
                c[k as usize & (FULL - 1)] += a * o.c[j as usize & (FULL - 1)];
            }
        }
        Self { order, c }
    }

    /// `self * (a + d_var)`.
    pub fn mul_variable(&self, var: usize, a: f64) -> Self {
        let n = jet_len(self.order);
        let mut r = self.scale(a);
        for &(s, d) in &tables().shift[var] {
            if (d as usize) < n {
                r.c[d as usize] += self.c[s as usize];
            }
        }
        r
    }

    /// `f(self)` given `f` and its first three derivatives at `self.value()`.
    pub fn compose(&self, d: [f64; MAX_ORDER + 1]) -> Self {
        let mut dx = *self;
        dx.c[0] = 0.0;
        let mut out = Self::constant(self.order, d[0]);
        let mut pow = Self::constant(self.order, 1.0);
        let mut fact = 1.0;
        for (k, dk) in d.iter().enumerate().skip(1).take(self.order) {
            pow = pow.mul(&dx);
            fact *= k as f64;
            out = out.add(&pow.scale(dk / fact));
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        let a = self.value();
        let s = a.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * a), 0.375 / (s * a * a)])
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(self.order, 1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// `d/d(coordinate var)`, one order lower.
    pub fn deriv(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let t = tables();
        let order = self.order - 1;
        let n = jet_len(order);
        let src = jet_len(self.order);
        let mut c = [0.0; FULL];
        for &(s, d, f) in &t.deriv[var] {
            if (s as usize) < src && (d as usize) < n {
                c[d as usize] += f * self.c[s as usize];
            }
        }
        Self { order, c }
    }
}

/// Coefficients of a commutation field as `(target, sign, source)`: the field contains
/// `sign * y_source * d_target`, or `sign * d_target` when `source` is `None`.
pub fn linear_coefficients(id: FieldId) -> &'static [(usize, f64, Option<usize>)] {
    const DT: [(usize, f64, Option<usize>); 1] = [(0, 1.0, None)];
    const D1: [(usize, f64, Option<usize>); 1] = [(1, 1.0, None)];
    const D2: [(usize, f64, Option<usize>); 1] = [(2, 1.0, None)];
    const D3: [(usize, f64, Option<usize>); 1] = [(3, 1.0, None)];
    const S: [(usize, f64, Option<usize>); 4] = [
        (0, 1.0, Some(0)),
        (1, 1.0, Some(1)),
        (2, 1.0, Some(2)),
        (3, 1.0, Some(3)),
    ];
    const SV: [(usize, f64, Option<usize>); 3] = [(4, 1.0, Some(4)), (5, 1.0, Some(5)), (6, 1.0, Some(6))];
    const fn rot(i: usize, j: usize) -> [(usize, f64, Option<usize>); 4] {
        [
            (j, 1.0, Some(i)),
            (i, -1.0, Some(j)),
            (3 + j, 1.0, Some(3 + i)),
            (3 + i, -1.0, Some(3 + j)),
        ]
    }
    const OM12: [(usize, f64, Option<usize>); 4] = rot(1, 2);
    const OM13: [(usize, f64, Option<usize>); 4] = rot(1, 3);
    const OM23: [(usize, f64, Option<usize>); 4] = rot(2, 3);
    match id {
        FieldId::Dt => &DT,
        FieldId::D1 => &D1,
        FieldId::D2 => &D2,
        FieldId::D3 => &D3,
        FieldId::S => &S,
        FieldId::Sv => &SV,
        FieldId::Om12 => &OM12,
        FieldId::Om13 => &OM13,
        FieldId::Om23 => &OM23,
    }
}

/// Index of the monomial `y_a y_b` in the graded order.
fn quadratic_index(a: usize, b: usize) -> usize {
    static IDX: OnceLock<[[usize; JET_VARS]; JET_VARS]> = OnceLock::new();
    IDX.get_or_init(|| {
        let t = tables();
        let mut out = [[0; JET_VARS]; JET_VARS];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let mut m = [0u8; JET_VARS];
                m[i] += 1;
                m[j] += 1;
                *e = t.monos.iter().position(|x| *x == m).expect("quadratic monomial");
            }
        }
        out
    })[a][b]
}

/// Value and gradient of `Z g` at `p` from a jet `g` of order at least two.
fn first_order(id: FieldId, g: &Jet, p: &PhasePoint) -> [f64; 1 + JET_VARS] {
    let q = p.coords();
    let c = &g.c;
    let mut out = [0.0; 1 + JET_VARS];
    for &(target, sign, source) in linear_coefficients(id) {
        let coef = source.map_or(1.0, |s| q[s]);
        out[0] += sign * coef * c[1 + target];
        for k in 0..JET_VARS {
            let f = if k == target { 2.0 } else { 1.0 };
            out[1 + k] += sign * coef * f * c[quadratic_index(k, target)];
        }
        if let Some(s) = source {
            out[1 + s] += sign * c[1 + target];
        }
    }
    out
}

/// `Z g` for a jet `g` expanded at `p`, one order lower.
pub fn apply_field(id: FieldId, g: &Jet, p: &PhasePoint) -> Jet {
    let q = p.coords();
    let order = g.order() - 1;
    let mut out = Jet::zero(order);
    for &(target, sign, source) in linear_coefficients(id) {
        let d = g.deriv(target);
        let term = match source {
            None => d,
            Some(s) => d.mul_variable(s, q[s]),
        };
        out = out.add(&term.scale(sign));
    }
    out
}

/// `Z g (p)` from a jet of order at least one, without forming the lower jet.
pub fn apply_field_value(id: FieldId, g: &Jet, p: &PhasePoint) -> f64 {
    let q = p.coords();
    linear_coefficients(id)
        .iter()
        .map(|&(target, sign, source)| {
            let d = g.coefficients()[1 + target];
            sign * source.map_or(1.0, |s| q[s]) * d
        })
        .sum()
}

/// `sum |Z^xi g (p)|` over all words of length at most `max_len` over `fields`.
pub fn word_abs_sum(fields: &[FieldId], g: &Jet, p: &PhasePoint, max_len: usize) -> f64 {
    assert!(max_len <= g.order(), "jet order too low for the word length");
    fn rec(fields: &[FieldId], g: &Jet, p: &PhasePoint, left: usize) -> f64 {
        let mut acc = g.value().abs();
        if left == 0 {
            return acc;
        }
        if left == 1 {
            for &id in fields {
                acc += apply_field_value(id, g, p).abs();
            }
            return acc;
        }
        if left == 2 {
            let q = p.coords();
            for &a in fields {
                let d = first_order(a, g, p);
                acc += d[0].abs();
                for &b in fields {
                    let v: f64 = linear_coefficients(b)
                        .iter()
                        .map(|&(target, sign, source)| sign * source.map_or(1.0, |s| q[s]) * d[1 + target])
                        .sum();
                    acc += v.abs();
                }
            }
            return acc;
        }
        for &id in fields {
            let zg = apply_field(id, g, p).truncate(left - 1);
            acc += rec(fields, &zg, p, left - 1);
        }
        acc
    }
    rec(fields, &g.truncate(max_len), p, max_len)
}
