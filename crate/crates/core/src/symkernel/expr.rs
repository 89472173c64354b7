//! Exact phase-space expressions with the radicals `w = |v|` and `u = |x|`.

use super::poly::{mono_mul, q, Mono, Poly, NVARS, ONE_MONO};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Base variables, in the order used by [`Mono`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X(u8),
    V(u8),
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::T, Var::X(1), Var::X(2), Var::X(3), Var::V(1), Var::V(2), Var::V(3)];

    pub fn index(self) -> usize {
        match self {
            Var::T => 0,
            Var::X(i) => i as usize,
            Var::V(i) => 3 + i as usize,
        }
    }

    pub fn from_index(i: usize) -> Var {
        Self::ALL[i]
    }
}

/// Monomial denominator `mono * w^w * u^u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Den {
    pub mono: Mono,
    pub w: u32,
    pub u: u32,
}

impl Den {
    pub const ONE: Den = Den {
        mono: ONE_MONO,
        w: 0,
        u: 0,
    };

    pub fn is_one(&self) -> bool {
        *self == Self::ONE
    }
}

/// `(P0 + w P1 + u P2 + w u P3) / den`.
///
/// Numerators never contain even powers of a radical; those are reduced by
/// `w^2 = v.v` and `u^2 = x.x`. Values are kept canonical after every operation.
#[derive(Clone, Debug)]
pub struct Expr {
    num: [Poly; 4],
    den: Den,
}

type Num = [Poly; 4];

fn num_zero() -> Num {
    [Poly::zero(), Poly::zero(), Poly::zero(), Poly::zero()]
}

fn num_is_zero(n: &Num) -> bool {
    n.iter().all(Poly::is_zero)
}

fn mul_w(n: &Num) -> Num {
    let vv = Poly::v_norm2();
    [&n[1] * &vv, n[0].clone(), &n[3] * &vv, n[2].clone()]
}

fn mul_u(n: &Num) -> Num {
    let xx = Poly::x_norm2();
    [&n[2] * &xx, &n[3] * &xx, n[0].clone(), n[1].clone()]
}

fn mul_w_pow(n: &Num, k: u32) -> Num {
    let mut out = n.clone();
    if k >= 2 {
        let mut f = Poly::one();
        let vv = Poly::v_norm2();
        for _ in 0..k / 2 {
            f = &f * &vv;
        }
        out = out.map(|p| &p * &f);
    }
    if k % 2 == 1 {
        out = mul_w(&out);
    }
    out
}

fn mul_u_pow(n: &Num, k: u32) -> Num {
    let mut out = n.clone();
    if k >= 2 {
        let mut f = Poly::one();
        let xx = Poly::x_norm2();
        for _ in 0..k / 2 {
            f = &f * &xx;
        }
        out = out.map(|p| &p * &f);
    }
    if k % 2 == 1 {
        out = mul_u(&out);
    }
    out
}

fn num_mul(a: &Num, b: &Num) -> Num {
    let vv = Poly::v_norm2();
    let xx = Poly::x_norm2();
    let p = |i: usize, j: usize| &a[i] * &b[j];
    let c0 = &(&p(0, 0) + &(&p(1, 1) * &vv)) + &(&(&p(2, 2) * &xx) + &(&(&p(3, 3) * &vv) * &xx));
    let c1 = &(&p(0, 1) + &p(1, 0)) + &(&(&p(2, 3) + &p(3, 2)) * &xx);
    let c2 = &(&p(0, 2) + &p(2, 0)) + &(&(&p(1, 3) + &p(3, 1)) * &vv);
    let c3 = &(&p(0, 3) + &p(3, 0)) + &(&p(1, 2) + &p(2, 1));
    [c0, c1, c2, c3]
}

impl Expr {
    fn raw(num: Num, den: Den) -> Self {
        let mut e = Self { num, den };
        e.canonicalize();
        e
    }

    pub fn zero() -> Self {
        Self {
            num: num_zero(),
            den: Den::ONE,
        }
    }

    pub fn one() -> Self {
        Self::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Self {
        Self::from_poly(Poly::constant(q(n)))
    }

    pub fn rational(c: BigRational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn from_poly(p: Poly) -> Self {
        let mut num = num_zero();
        num[0] = p;
        Self::raw(num, Den::ONE)
    }

    pub fn var(v: Var) -> Self {
        Self::from_poly(Poly::var(v.index()))
    }

    pub fn t() -> Self {
        Self::var(Var::T)
    }

    pub fn x(i: u8) -> Self {
        Self::var(Var::X(i))
    }

    pub fn v(i: u8) -> Self {
        Self::var(Var::V(i))
    }

    /// `w = |v|`.
    pub fn w() -> Self {
        let mut num = num_zero();
        num[1] = Poly::one();
        Self::raw(num, Den::ONE)
    }

    /// `u = |x|`.
    pub fn u() -> Self {
        let mut num = num_zero();
        num[2] = Poly::one();
        Self::raw(num, Den::ONE)
    }

    /// `x . v`.
    pub fn x_dot_v() -> Self {
        (1..=3).fold(Self::zero(), |acc, i| acc + Self::x(i) * Self::v(i))
    }

    pub fn numerator(&self) -> &[Poly; 4] {
        &self.num
    }

    pub fn denominator(&self) -> &Den {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        num_is_zero(&self.num)
    }

    /// True when the expression is a polynomial in the base variables.
    pub fn is_polynomial(&self) -> bool {
        self.den.is_one() && self.num[1..].iter().all(Poly::is_zero)
    }

    /// Number of stored numerator terms.
    pub fn term_count(&self) -> usize {
        self.num.iter().map(Poly::len).sum()
    }

    fn canonicalize(&mut self) {
        if num_is_zero(&self.num) {
            self.den = Den::ONE;
            return;
        }
        let vv = Poly::v_norm2();
        let xx = Poly::x_norm2();
        loop {
            let mut changed = false;
            let mut g: Option<Mono> = None;
            for p in &self.num {
                if let Some(m) = p.min_exponents() {
                    g = Some(match g {
                        None => m,
                        Some(h) => std::array::from_fn(|i| h[i].min(m[i])),
                    });
                }
            }
            if let Some(g) = g {
                let c: Mono = std::array::from_fn(|i| g[i].min(self.den.mono[i]));
                if c != ONE_MONO {
                    for p in self.num.iter_mut() {
                        *p = p.div_mono(&c);
                    }
                    for i in 0..NVARS {
                        self.den.mono[i] -= c[i];
                    }
                    changed = true;
                }
            }
            if self.den.w > 0 {
                if let (Some(q0), Some(q2)) = (self.num[0].div_exact(&vv), self.num[2].div_exact(&vv)) {
                    let [_, p1, _, p3] = std::mem::replace(&mut self.num, num_zero());
                    self.num = [p1, q0, p3, q2];
                    self.den.w -= 1;
                    changed = true;
                }
            }
            if self.den.u > 0 {
                if let (Some(q0), Some(q1)) = (self.num[0].div_exact(&xx), self.num[1].div_exact(&xx)) {
                    let [_, _, p2, p3] = std::mem::replace(&mut self.num, num_zero());
                    self.num = [p2, p3, q0, q1];
                    self.den.u -= 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn lift_to(&self, den: &Den) -> Num {
        let extra: Mono = std::array::from_fn(|i| den.mono[i] - self.den.mono[i]);
        let n = self.num.clone().map(|p| p.mul_mono(&extra));
        let n = mul_w_pow(&n, den.w - self.den.w);
        mul_u_pow(&n, den.u - self.den.u)
    }

    fn common_den(a: &Den, b: &Den) -> Den {
        Den {
            mono: std::array::from_fn(|i| a.mono[i].max(b.mono[i])),
            w: a.w.max(b.w),
            u: a.u.max(b.u),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::raw(self.num.clone().map(|p| p.scale(c)), self.den)
    }

    /// Multiplicative inverse, defined when the numerator is a single term.
    pub fn inv(&self) -> Option<Self> {
        let nonzero: Vec<usize> = (0..4).filter(|&i| !self.num[i].is_zero()).collect();
        if nonzero.len() != 1 || self.num[nonzero[0]].len() != 1 {
            return None;
        }
        let k = nonzero[0];
        let (m, c) = self.num[k].leading().expect("single term");
        let mut top = num_zero();
        top[0] = Poly::monomial(self.den.mono, BigRational::one() / c);
        let top = mul_u_pow(&mul_w_pow(&top, self.den.w), self.den.u);
        let den = Den {
            mono: *m,
            w: (k & 1) as u32,
            u: (k >> 1) as u32,
        };
        Some(Self::raw(top, den))
    }

    /// Quotient by an expression with a single-term numerator.
    pub fn checked_div(&self, rhs: &Expr) -> Option<Self> {
        Some(self * &rhs.inv()?)
    }

    /// Exact partial derivative with respect to a base variable.
    pub fn diff(&self, var: Var) -> Self {
        let i = var.index();
        let mut dn = num_zero();
        for (k, p) in self.num.iter().enumerate() {
            dn[k] = p.diff(i);
        }
        let mut out = Self::raw(dn, self.den);
        // radical contributions: d(w) = v_i / w, d(u) = x_i / u
        if let Var::V(_) = var {
            let coef = Self::from_parts(
                [self.num[1].clone(), Poly::zero(), self.num[3].clone(), Poly::zero()],
                self.den,
            );
            if !coef.is_zero() {
                out = out + coef * Self::var(var) * Self::w_inv();
            }
        }
        if let Var::X(_) = var {
            let coef = Self::from_parts(
                [self.num[2].clone(), self.num[3].clone(), Poly::zero(), Poly::zero()],
                self.den,
            );
            if !coef.is_zero() {
                out = out + coef * Self::var(var) * Self::u_inv();
            }
        }
        // denominator: d(1/D)/(1/D) = -(a_i / var_i) - d v_i / w^2 - e x_i / u^2
        let a = self.den.mono[i];
        let mut log_d = Self::zero();
        if a > 0 {
            log_d = log_d + Self::var(var).inv().expect("variable").scale(&q(a as i64));
        }
        if let Var::V(_) = var {
            if self.den.w > 0 {
                log_d = log_d + Self::var(var) * Self::w_inv() * Self::w_inv().scale(&q(self.den.w as i64));
            }
        }
        if let Var::X(_) = var {
            if self.den.u > 0 {
                log_d = log_d + Self::var(var) * Self::u_inv() * Self::u_inv().scale(&q(self.den.u as i64));
            }
        }
        if !log_d.is_zero() {
            out = out - self * &log_d;
        }
        out
    }

    fn from_parts(num: Num, den: Den) -> Self {
        Self::raw(num, den)
    }

    fn w_inv() -> Self {
        let mut num = num_zero();
        num[0] = Poly::one();
        Self::raw(num, Den { w: 1, ..Den::ONE })
    }

    fn u_inv() -> Self {
        let mut num = num_zero();
        num[0] = Poly::one();
        Self::raw(num, Den { u: 1, ..Den::ONE })
    }

    /// Exact zero test of the difference.
    pub fn equals(&self, other: &Expr) -> bool {
        (self - other).is_zero()
    }

    /// Floating-point evaluation at `(t, x1, x2, x3, v1, v2, v3)`.
    pub fn eval_f64(&self, p: &[f64; NVARS]) -> f64 {
        let w = (p[4] * p[4] + p[5] * p[5] + p[6] * p[6]).sqrt();
        let u = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        let n = self.num[0].eval_f64(p)
            + w * self.num[1].eval_f64(p)
            + u * self.num[2].eval_f64(p)
            + w * u * self.num[3].eval_f64(p);
        let d = Poly::monomial(self.den.mono, BigRational::one()).eval_f64(p)
            * w.powi(self.den.w as i32)
            * u.powi(self.den.u as i32);
        n / d
    }

    /// Evaluates the polynomial parts exactly, then combines with the radicals in `f64`.
    pub fn eval_exact(&self, p: &[BigRational; NVARS]) -> f64 {
        let vv = Poly::v_norm2().eval_exact(p);
        let xx = Poly::x_norm2().eval_exact(p);
        let w = vv.to_f64().unwrap_or(f64::NAN).sqrt();
        let u = xx.to_f64().unwrap_or(f64::NAN).sqrt();
        let c: Vec<f64> = self
            .num
            .iter()
            .map(|poly| poly.eval_exact(p).to_f64().unwrap_or(f64::NAN))
            .collect();
        let d = Poly::monomial(self.den.mono, BigRational::one())
            .eval_exact(p)
            .to_f64()
            .unwrap_or(f64::NAN)
            * w.powi(self.den.w as i32)
            * u.powi(self.den.u as i32);
        (c[0] + w * c[1] + u * c[2] + w * u * c[3]) / d
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc * self)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let den = Expr::common_den(&self.den, &rhs.den);
        let a = self.lift_to(&den);
        let b = rhs.lift_to(&den);
        Expr::raw(std::array::from_fn(|i| &a[i] + &b[i]), den)
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        let den = Den {
            mono: mono_mul(&self.den.mono, &rhs.den.mono),
            w: self.den.w + rhs.den.w,
            u: self.den.u + rhs.den.u,
        };
        Expr::raw(num_mul(&self.num, &rhs.num), den)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            num: self.num.clone().map(|p| -&p),
            den: self.den,
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const BASIS: [&str; 4] = ["", "w", "u", "w*u"];
        let parts: Vec<String> = (0..4)
            .filter(|&k| !self.num[k].is_zero())
            .map(|k| {
                if k == 0 {
                    format!("({})", self.num[k])
                } else {
                    format!("({})*{}", self.num[k], BASIS[k])
                }
            })
            .collect();
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", parts.join(" + "))?;
        if !self.den.is_one() {
            let mut d: Vec<String> = Vec::new();
            let m = Poly::monomial(self.den.mono, BigRational::one());
            if self.den.mono != ONE_MONO {
                d.push(m.to_string());
            }
            if self.den.w > 0 {
                d.push(format!("w^{}", self.den.w));
            }
            if self.den.u > 0 {
                d.push(format!("u^{}", self.den.u));
            }
            write!(f, " / ({})", d.join("*"))?;
        }
        Ok(())
    }
}
