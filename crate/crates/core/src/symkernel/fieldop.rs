//! First-order differential operators with exact coefficients.

use super::expr::{Expr, Var};
use super::poly::NVARS;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// `sum_k c_k d/d(var_k)` over the seven base derivations.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldOp {
    coeffs: [Expr; NVARS],
}

impl FieldOp {
    pub fn zero() -> Self {
        Self {
            coeffs: std::array::from_fn(|_| Expr::zero()),
        }
    }

    pub fn new(coeffs: [Expr; NVARS]) -> Self {
        Self { coeffs }
    }

    /// Builds an operator from `(variable, coefficient)` pairs; repeated variables add.
    pub fn from_terms<I: IntoIterator<Item = (Var, Expr)>>(terms: I) -> Self {
        let mut op = Self::zero();
        for (v, c) in terms {
            let k = v.index();
            op.coeffs[k] = &op.coeffs[k] + &c;
        }
        op
    }

    /// The coordinate derivation `d/d(var)`.
    pub fn partial(var: Var) -> Self {
        Self::from_terms([(var, Expr::one())])
    }

    pub fn coeff(&self, var: Var) -> &Expr {
        &self.coeffs[var.index()]
    }

    pub fn coeffs(&self) -> &[Expr; NVARS] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    /// `A(e) = sum_k c_k de/d(var_k)`.
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = e.diff(Var::from_index(k));
            if !d.is_zero() {
                acc = acc + c * &d;
            }
        }
        acc
    }

    /// `[A, B]` with coefficient `A(b_k) - B(a_k)`.
    pub fn commutator(&self, other: &FieldOp) -> FieldOp {
        FieldOp {
            coeffs: std::array::from_fn(|k| self.apply(&other.coeffs[k]) - other.apply(&self.coeffs[k])),
        }
    }

    /// Multiplies every coefficient by `f`.
    pub fn scale(&self, f: &Expr) -> FieldOp {
        FieldOp {
            coeffs: std::array::from_fn(|k| f * &self.coeffs[k]),
        }
    }

    /// Total numerator term count, used to size residual reports.
    pub fn term_count(&self) -> usize {
        self.coeffs.iter().map(Expr::term_count).sum()
    }
}

impl Add<&FieldOp> for &FieldOp {
    type Output = FieldOp;
    fn add(self, rhs: &FieldOp) -> FieldOp {
        FieldOp {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] + &rhs.coeffs[k]),
        }
    }
}

impl Sub<&FieldOp> for &FieldOp {
    type Output = FieldOp;
    fn sub(self, rhs: &FieldOp) -> FieldOp {
        FieldOp {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] - &rhs.coeffs[k]),
        }
    }
}

impl Add for FieldOp {
    type Output = FieldOp;
    fn add(self, rhs: FieldOp) -> FieldOp {
        &self + &rhs
    }
}

impl Sub for FieldOp {
    type Output = FieldOp;
    fn sub(self, rhs: FieldOp) -> FieldOp {
        &self - &rhs
    }
}

impl Neg for &FieldOp {
    type Output = FieldOp;
    fn neg(self) -> FieldOp {
        FieldOp {
            coeffs: std::array::from_fn(|k| -&self.coeffs[k]),
        }
    }
}

impl fmt::Display for FieldOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; NVARS] = ["d_t", "d_x1", "d_x2", "d_x3", "d_v1", "d_v2", "d_v3"];
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| format!("[{}] {}", c, NAMES[k]))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
