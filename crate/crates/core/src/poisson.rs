//! Radial Poisson solver: `E(r) = r^-2 int_0^r rho(s) s^2 ds` on a uniform node grid.
//!
//! The density is the piecewise-linear interpolant of its node samples, and every
//! integral below is exact for that interpolant. Node volumes are the integrals of
//! `4 pi s^2` against the hat functions, which makes deposition and charge agree.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform radial grid with nodes `r_j = j h`, `j = 0..=n_cells`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n_cells: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_cells: usize) -> Self {
        assert!(r_max > 0.0 && n_cells >= 2, "grid needs r_max > 0 and at least 2 cells");
        Self { r_max, n_cells }
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n_cells as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// `4 pi int s^2 phi_j(s) ds` for the hat function of node `j`.
    pub fn node_volume(&self, j: usize) -> f64 {
        let h = self.h();
        let r = self.node(j);
        let v = if j == 0 {
            h * h * h / 12.0
        } else if j == self.n_cells {
            r * r * h / 2.0 - r * h * h / 3.0 + h * h * h / 12.0
        } else {
            r * r * h + h * h * h / 6.0
        };
        4.0 * PI * v
    }

    /// Cell index and fractional offset of `r`; `None` outside `[0, r_max)`.
    pub fn locate(&self, r: f64) -> Option<(usize, f64)> {
        if !(0.0..self.r_max).contains(&r) {
            return None;
        }
        let s = r / self.h();
        let j = (s.floor() as usize).min(self.n_cells - 1);
        Some((j, s - j as f64))
    }
}

/// `int_0^y (a+e)^2 (1-e/h) de` and `int_0^y (a+e)^2 e/h de`.
fn cell_moments(a: f64, h: f64, y: f64) -> (f64, f64) {
    let i0 = a * a * y + a * y * y + y * y * y / 3.0;
    let i1 = a * a * y * y / 2.0 + 2.0 * a * y * y * y / 3.0 + y * y * y * y / 4.0;
    (i0 - i1 / h, i1 / h)
}

/// Density samples, field samples and total charge on a radial grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub rho: Vec<f64>,
    pub e: Vec<f64>,
    /// `int_0^{r_j} s^2 rho ds`, so that `E_j = m_j / r_j^2`.
    pub enclosed: Vec<f64>,
    pub q: f64,
}

/// Solves for the field of the node samples `rho`.
pub fn solve_field(grid: RadialGrid, rho: &[f64]) -> RadialField {
    assert_eq!(rho.len(), grid.n_nodes(), "density length must match the grid");
    let h = grid.h();
    let mut enclosed = Vec::with_capacity(grid.n_nodes());
    let mut acc = 0.0;
    enclosed.push(0.0);
    for j in 0..grid.n_cells {
        let (a, b) = cell_moments(grid.node(j), h, h);
        acc += rho[j] * a + rho[j + 1] * b;
        enclosed.push(acc);
    }
    let e = enclosed
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == 0 {
                0.0
            } else {
                let r = grid.node(j);
                m / (r * r)
            }
        })
        .collect();
    RadialField {
        grid,
        rho: rho.to_vec(),
        e,
        q: 4.0 * PI * acc,
        enclosed,
    }
}

/// Total charge `4 pi int rho r^2 dr` under the same quadrature rule.
pub fn charge(grid: RadialGrid, rho: &[f64]) -> f64 {
    rho.iter().enumerate().map(|(j, r)| r * grid.node_volume(j)).sum()
}

impl RadialField {
    pub fn zero(grid: RadialGrid) -> Self {
        solve_field(grid, &vec![0.0; grid.n_nodes()])
    }

    /// Density of the linear interpolant at `r`.
    pub fn rho_at(&self, r: f64) -> f64 {
        match self.grid.locate(r) {
            Some((j, th)) => self.rho[j] * (1.0 - th) + self.rho[j + 1] * th,
            None => 0.0,
        }
    }

    /// `(E, dE/dr)` at radius `r >= 0`.
    pub fn field_at(&self, r: f64) -> (f64, f64) {
        match self.grid.locate(r) {
            None => {
                let c = self.q / (4.0 * PI);
                (c / (r * r), -2.0 * c / (r * r * r))
            }
            Some((j, th)) => {
                if r == 0.0 {
                    return (0.0, self.rho[0] / 3.0);
                }
                let h = self.grid.h();
                let (a, b) = cell_moments(self.grid.node(j), h, th * h);
                let m = self.enclosed[j] + self.rho[j] * a + self.rho[j + 1] * b;
                let e = m / (r * r);
                let rho = self.rho[j] * (1.0 - th) + self.rho[j + 1] * th;
                (e, rho - 2.0 * e / r)
            }
        }
    }

    /// `sup_r (1 + t + r)^2 |E(r)|` over the nodes.
    pub fn potential_decay_report(&self, t: f64) -> f64 {
        self.e
            .iter()
            .enumerate()
            .map(|(j, e)| (1.0 + t + self.grid.node(j)).powi(2) * e.abs())
            .fold(0.0, f64::max)
    }

    /// `4 pi int_0^inf E^2 r^2 dr`, exact exterior tail included.
    pub fn field_energy(&self) -> f64 {
        let (xs, ws) = crate::quadrature::gauss_legendre(4);
        let h = self.grid.h();
        let mut acc = 0.0;
        for j in 0..self.grid.n_cells {
            let a = self.grid.node(j);
            let mut cell = 0.0;
            for (x, w) in xs.iter().zip(&ws) {
                let r = a + 0.5 * h * (1.0 + x);
                let (e, _) = self.field_at(r);
                cell += w * e * e * r * r;
            }
            acc += 0.5 * h * cell;
        }
        4.0 * PI * acc + self.q * self.q / (4.0 * PI * self.grid.r_max)
    }

    /// CSV rows `r,rho,E`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,rho,E\n");
        for j in 0..self.grid.n_nodes() {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.grid.node(j),
                self.rho[j],
                self.e[j]
            ));
        }
        s
    }
}
