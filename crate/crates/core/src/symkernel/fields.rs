//! Exact forms of the transport operator and the commutation vector fields.

use super::expr::{Expr, Var};
use super::fieldop::FieldOp;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Members of the commutation set: translations, the two scalings and the lifted rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldId {
    Dt,
    D1,
    D2,
    D3,
    S,
    Sv,
    Om12,
    Om13,
    Om23,
}

impl FieldId {
    pub const ALL: [FieldId; 9] = [
        FieldId::Dt,
        FieldId::D1,
        FieldId::D2,
        FieldId::D3,
        FieldId::S,
        FieldId::Sv,
        FieldId::Om12,
        FieldId::Om13,
        FieldId::Om23,
    ];

    pub const ROTATIONS: [FieldId; 3] = [FieldId::Om12, FieldId::Om13, FieldId::Om23];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldId::Dt => "dt",
            FieldId::D1 => "d1",
            FieldId::D2 => "d2",
            FieldId::D3 => "d3",
            FieldId::S => "S",
            FieldId::Sv => "Sv",
            FieldId::Om12 => "Om12",
            FieldId::Om13 => "Om13",
            FieldId::Om23 => "Om23",
        }
    }

    /// Index pair for a rotation.
    pub fn rotation_pair(self) -> Option<(u8, u8)> {
        match self {
            FieldId::Om12 => Some((1, 2)),
            FieldId::Om13 => Some((1, 3)),
            FieldId::Om23 => Some((2, 3)),
            _ => None,
        }
    }

    /// True for members whose spacetime projection differs from the field itself.
    pub fn is_lift(self) -> bool {
        matches!(self, FieldId::Sv | FieldId::Om12 | FieldId::Om13 | FieldId::Om23)
    }

    /// Exact operator.
    pub fn op(self) -> FieldOp {
        match self {
            FieldId::Dt => FieldOp::partial(Var::T),
            FieldId::D1 => FieldOp::partial(Var::X(1)),
            FieldId::D2 => FieldOp::partial(Var::X(2)),
            FieldId::D3 => FieldOp::partial(Var::X(3)),
            FieldId::S => scaling(),
            FieldId::Sv => velocity_scaling(),
            FieldId::Om12 => rotation_lift(1, 2),
            FieldId::Om13 => rotation_lift(1, 3),
            FieldId::Om23 => rotation_lift(2, 3),
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldId::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown vector field `{s}`"))
    }
}

/// `T = |v| d_t + v^i d_i`.
pub fn transport() -> FieldOp {
    FieldOp::from_terms([
        (Var::T, Expr::w()),
        (Var::X(1), Expr::v(1)),
        (Var::X(2), Expr::v(2)),
        (Var::X(3), Expr::v(3)),
    ])
}

/// `S = t d_t + x^i d_i`.
pub fn scaling() -> FieldOp {
    FieldOp::from_terms([
        (Var::T, Expr::t()),
        (Var::X(1), Expr::x(1)),
        (Var::X(2), Expr::x(2)),
        (Var::X(3), Expr::x(3)),
    ])
}

/// `S_v = v^i d_{v^i}`.
pub fn velocity_scaling() -> FieldOp {
    FieldOp::from_terms((1..=3).map(|i| (Var::V(i), Expr::v(i))))
}

/// `Omega_ij = x^i d_j - x^j d_i`.
pub fn rotation(i: u8, j: u8) -> FieldOp {
    FieldOp::from_terms([(Var::X(j), Expr::x(i)), (Var::X(i), -Expr::x(j))])
}

/// `Omega_ij + v^i d_{v^j} - v^j d_{v^i}`.
pub fn rotation_lift(i: u8, j: u8) -> FieldOp {
    &rotation(i, j) + &FieldOp::from_terms([(Var::V(j), Expr::v(i)), (Var::V(i), -Expr::v(j))])
}

/// `v^r = (x . v) / |x|`.
pub fn radial_velocity() -> Expr {
    Expr::x_dot_v() * Expr::u().inv().expect("u is a single term")
}

/// `d_r = (x^i / |x|) d_i`.
pub fn radial_derivative() -> FieldOp {
    let inv_u = Expr::u().inv().expect("u is a single term");
    FieldOp::from_terms((1..=3).map(|i| (Var::X(i), Expr::x(i) * &inv_u)))
}

/// `v^i d_i`.
pub fn velocity_gradient_x() -> FieldOp {
    FieldOp::from_terms((1..=3).map(|i| (Var::X(i), Expr::v(i))))
}

/// `sum_i c_i d_{v^i}`.
pub fn v_derivation(c: [Expr; 3]) -> FieldOp {
    let [a, b, d] = c;
    FieldOp::from_terms([(Var::V(1), a), (Var::V(2), b), (Var::V(3), d)])
}

/// Spatial gradient of a function of `(t, x)`.
pub fn grad_x(phi: &Expr) -> [Expr; 3] {
    [phi.diff(Var::X(1)), phi.diff(Var::X(2)), phi.diff(Var::X(3))]
}

/// `sigma |v| grad(psi) . grad_v`.
pub fn force_term(psi: &Expr, sigma: i64) -> FieldOp {
    v_derivation(grad_x(psi)).scale(&(Expr::w() * Expr::int(sigma)))
}

/// `T_phi = T + sigma |v| grad(phi) . grad_v`.
pub fn transport_with_potential(phi: &Expr, sigma: i64) -> FieldOp {
    &transport() + &force_term(phi, sigma)
}

/// Spacetime projection of a commutation field.
pub fn spacetime_part(id: FieldId) -> FieldOp {
    match id {
        FieldId::Sv => FieldOp::zero(),
        FieldId::Om12 => rotation(1, 2),
        FieldId::Om13 => rotation(1, 3),
        FieldId::Om23 => rotation(2, 3),
        other => other.op(),
    }
}
