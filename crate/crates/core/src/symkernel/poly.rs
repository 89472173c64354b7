//! Sparse multivariate polynomials over exact rationals in (t, x1, x2, x3, v1, v2, v3).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Number of base variables.
pub const NVARS: usize = 7;

/// Exponent vector. Index 0 is `t`, 1..=3 are `x`, 4..=6 are `v`.
pub type Mono = [u8; NVARS];

/// Display names of the base variables.
pub const VAR_NAMES: [&str; NVARS] = ["t", "x1", "x2", "x3", "v1", "v2", "v3"];

pub(crate) const ONE_MONO: Mono = [0; NVARS];

/// Builds a rational from an integer.
pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Builds the rational `n/d`.
pub fn qr(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A polynomial stored as a map from exponent vectors to nonzero coefficients.
///
/// Keys are ordered lexicographically with `t` most significant, so the last
/// entry is the leading term in lex order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(ONE_MONO, c)
    }

    pub fn monomial(m: Mono, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    /// The base variable with index `i`.
    pub fn var(i: usize) -> Self {
        let mut m = ONE_MONO;
        m[i] = 1;
        Self::monomial(m, BigRational::one())
    }

    /// `v1^2 + v2^2 + v3^2`.
    pub fn v_norm2() -> Self {
        sum_of_squares(4)
    }

    /// `x1^2 + x2^2 + x3^2`.
    pub fn x_norm2() -> Self {
        sum_of_squares(1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    /// Leading term in lex order.
    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    /// Multiplies by the monomial `m`.
    pub fn mul_mono(&self, m: &Mono) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, a)| (mono_mul(k, m), a.clone())).collect(),
        }
    }

    /// Divides by the monomial `m`; every term must be divisible.
    pub(crate) fn div_mono(&self, m: &Mono) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, a)| {
                    let mut r = *k;
                    for i in 0..NVARS {
                        debug_assert!(r[i] >= m[i]);
                        r[i] -= m[i];
                    }
                    (r, a.clone())
                })
                .collect(),
        }
    }

    /// Componentwise minimum exponent over all terms.
    pub fn min_exponents(&self) -> Option<Mono> {
        let mut it = self.terms.keys();
        let mut g = *it.next()?;
        for m in it {
            for i in 0..NVARS {
                g[i] = g[i].min(m[i]);
            }
        }
        Some(g)
    }

    /// Partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (m, a) in &self.terms {
            if m[i] > 0 {
                let mut r = *m;
                r[i] -= 1;
                out.add_term(r, a * q(m[i] as i64));
            }
        }
        out
    }

    /// Exact division. Returns `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        let (lm, lc) = d.leading()?;
        let (lm, lc) = (*lm, lc.clone());
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some((m, c)) = rem.leading() {
            let mut qm = ONE_MONO;
            for i in 0..NVARS {
                if m[i] < lm[i] {
                    return None;
                }
                qm[i] = m[i] - lm[i];
            }
            let qc = c / &lc;
            let step = d.mul_mono(&qm).scale(&qc);
            rem = &rem - &step;
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Evaluates at a rational point.
    pub fn eval_exact(&self, p: &[BigRational; NVARS]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, a) in &self.terms {
            let mut term = a.clone();
            for i in 0..NVARS {
                for _ in 0..m[i] {
                    term *= &p[i];
                }
            }
            acc += term;
        }
        acc
    }

    /// Evaluates in floating point.
    pub fn eval_f64(&self, p: &[f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(m, a)| {
                let mut term = a.to_f64().unwrap_or(f64::NAN);
                for i in 0..NVARS {
                    term *= p[i].powi(m[i] as i32);
                }
                term
            })
            .sum()
    }
}

fn sum_of_squares(first: usize) -> Poly {
    let mut p = Poly::zero();
    for i in first..first + 3 {
        let mut m = ONE_MONO;
        m[i] = 2;
        p.add_term(m, BigRational::one());
    }
    p
}

pub(crate) fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut r = *a;
    for i in 0..NVARS {
        r[i] = r[i].checked_add(b[i]).expect("exponent overflow");
    }
    r
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (big, small) = if self.len() >= rhs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, a) in &small.terms {
            out.add_term(*m, a.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, a) in &rhs.terms {
            out.add_term(*m, -a.clone());
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, a) in &self.terms {
            for (mb, b) in &rhs.terms {
                out.add_term(mono_mul(ma, mb), a * b);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, a)| (*m, -a.clone())).collect(),
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, a)) in self.terms.iter().rev().enumerate() {
            let neg = a.is_negative();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mag = a.abs();
            let is_const = *m == ONE_MONO;
            if !mag.is_one() || is_const {
                write!(f, "{}", mag)?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut first = true;
            for i in 0..NVARS {
                if m[i] == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", VAR_NAMES[i])?;
                if m[i] > 1 {
                    write!(f, "^{}", m[i])?;
                }
            }
        }
        Ok(())
    }
}
