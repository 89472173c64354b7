//! Weights annihilated by free transport.

use super::expr::Expr;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Identifiers of the weights of `k0`, the Morawetz weight and `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightId {
    VHat0,
    VHat1,
    VHat2,
    VHat3,
    S,
    Z12,
    Z13,
    Z23,
    Z01,
    Z02,
    Z03,
    Morawetz,
    Z,
}

impl WeightId {
    /// The eleven members of `k0`.
    pub const K0: [WeightId; 11] = [
        WeightId::VHat0,
        WeightId::VHat1,
        WeightId::VHat2,
        WeightId::VHat3,
        WeightId::S,
        WeightId::Z12,
        WeightId::Z13,
        WeightId::Z23,
        WeightId::Z01,
        WeightId::Z02,
        WeightId::Z03,
    ];

    /// `k = k0` without the `z_0k`.
    pub const K: [WeightId; 8] = [
        WeightId::VHat0,
        WeightId::VHat1,
        WeightId::VHat2,
        WeightId::VHat3,
        WeightId::S,
        WeightId::Z12,
        WeightId::Z13,
        WeightId::Z23,
    ];

    pub const ALL: [WeightId; 13] = [
        WeightId::VHat0,
        WeightId::VHat1,
        WeightId::VHat2,
        WeightId::VHat3,
        WeightId::S,
        WeightId::Z12,
        WeightId::Z13,
        WeightId::Z23,
        WeightId::Z01,
        WeightId::Z02,
        WeightId::Z03,
        WeightId::Morawetz,
        WeightId::Z,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeightId::VHat0 => "vhat0",
            WeightId::VHat1 => "vhat1",
            WeightId::VHat2 => "vhat2",
            WeightId::VHat3 => "vhat3",
            WeightId::S => "s",
            WeightId::Z12 => "z12",
            WeightId::Z13 => "z13",
            WeightId::Z23 => "z23",
            WeightId::Z01 => "z01",
            WeightId::Z02 => "z02",
            WeightId::Z03 => "z03",
            WeightId::Morawetz => "m",
            WeightId::Z => "z",
        }
    }

    pub fn in_k(self) -> bool {
        Self::K.contains(&self)
    }
}

impl fmt::Display for WeightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeightId::ALL
            .iter()
            .copied()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| format!("unknown weight `{s}`"))
    }
}

fn inv_w() -> Expr {
    Expr::w().inv().expect("w is a single term")
}

/// Exact expression of a weight. For [`WeightId::Z`] this is `z^2`.
pub fn weight_expr(id: WeightId) -> Expr {
    let iw = inv_w();
    let zij = |i: u8, j: u8| (Expr::x(i) * Expr::v(j) - Expr::x(j) * Expr::v(i)) * &iw;
    let z0k = |k: u8| Expr::x(k) - Expr::t() * Expr::v(k) * &iw;
    match id {
        WeightId::VHat0 => Expr::one(),
        WeightId::VHat1 => Expr::v(1) * &iw,
        WeightId::VHat2 => Expr::v(2) * &iw,
        WeightId::VHat3 => Expr::v(3) * &iw,
        WeightId::S => Expr::t() - Expr::x_dot_v() * &iw,
        WeightId::Z12 => zij(1, 2),
        WeightId::Z13 => zij(1, 3),
        WeightId::Z23 => zij(2, 3),
        WeightId::Z01 => z0k(1),
        WeightId::Z02 => z0k(2),
        WeightId::Z03 => z0k(3),
        WeightId::Morawetz => {
            let r2 = Expr::x(1) * Expr::x(1) + Expr::x(2) * Expr::x(2) + Expr::x(3) * Expr::x(3);
            let tt = Expr::t() * Expr::t();
            -(tt + r2) + Expr::int(2) * Expr::t() * Expr::x_dot_v() * &iw
        }
        WeightId::Z => WeightId::K0.iter().fold(Expr::zero(), |acc, &k| {
            let e = weight_expr(k);
            acc + &e * &e
        }),
    }
}

/// A named weight with its exact form.
#[derive(Clone, Debug)]
pub struct Weight {
    pub id: WeightId,
    pub expr: Expr,
}

/// The weight catalog: `k0`, its subset `k`, `z^2` and the Morawetz weight.
#[derive(Clone, Debug)]
pub struct WeightCatalog {
    pub k0: Vec<Weight>,
    pub z_squared: Expr,
    pub morawetz: Expr,
}

impl WeightCatalog {
    pub fn new() -> Self {
        let k0 = WeightId::K0
            .iter()
            .map(|&id| Weight {
                id,
                expr: weight_expr(id),
            })
            .collect();
        Self {
            k0,
            z_squared: weight_expr(WeightId::Z),
            morawetz: weight_expr(WeightId::Morawetz),
        }
    }

    pub fn k(&self) -> impl Iterator<Item = &Weight> {
        self.k0.iter().filter(|w| w.id.in_k())
    }

    pub fn get(&self, id: WeightId) -> Option<&Weight> {
        self.k0.iter().find(|w| w.id == id)
    }
}

impl Default for WeightCatalog {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_has_eight_members() {
        let c = WeightCatalog::new();
        assert_eq!(c.k0.len(), 11);
        assert_eq!(c.k().count(), 8);
    }

    #[test]
    fn z_squared_at_origin_is_two() {
        let z2 = weight_expr(WeightId::Z);
        let p = [0.0, 0.0, 0.0, 0.0, 0.3, -1.2, 2.0];
        assert!((z2.eval_f64(&p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_weight_matches_its_definition() {
        let s = weight_expr(WeightId::S);
        let alt = Expr::t() - Expr::x_dot_v() * Expr::w().inv().unwrap();
        assert_eq!(s, alt);
        assert_ne!(s, Expr::t());
    }
}
