//! Equal-weight particle ensemble, deposition and the kick-drift-kick step.

use super::init::InitialData;
use crate::characteristics::{projector, radial_force};
use crate::error::SimError;
use crate::phasegeom::{chi, chi_prime};
use crate::poisson::{solve_field, RadialField, RadialGrid};
use crate::quadrature::gauss_legendre;
use crate::reduce::{chunked_fold, chunked_min, chunked_sum};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Particles `(X_p, V_p, omega_p)` with their initial points and optional tangents.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    pub t: f64,
    pub x: Vec<Vector3<f64>>,
    pub v: Vec<Vector3<f64>>,
    pub weight: Vec<f64>,
    pub x0: Vec<Vector3<f64>>,
    pub v0: Vec<Vector3<f64>>,
    pub f0: Vec<f64>,
    pub grad_f0: Vec<Vector6<f64>>,
    pub tangent: Option<Vec<Matrix6<f64>>>,
    pub seed: u64,
}

/// Density samples together with the weight that fell outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Deposit {
    pub rho: Vec<f64>,
    pub overflow: f64,
}

/// Inverse of `F(x) = int_lo^x p / int_lo^hi p` for a polynomial density `p`.
struct InverseCdf<P: Fn(f64) -> f64> {
    pdf: P,
    lo: f64,
    hi: f64,
    total: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<P: Fn(f64) -> f64> InverseCdf<P> {
    fn new(pdf: P, lo: f64, hi: f64) -> Self {
        let (nodes, weights) = gauss_legendre(16);
        let mut s = Self {
            pdf,
            lo,
            hi,
            total: 1.0,
            nodes,
            weights,
        };
        s.total = s.mass(hi);
        s
    }

    fn mass(&self, x: f64) -> f64 {
        let half = 0.5 * (x - self.lo);
        let mid = 0.5 * (x + self.lo);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (self.pdf)(mid + half * s))
            .sum::<f64>()
    }

    fn invert(&self, u: f64) -> f64 {
        let target = u * self.total;
        let (mut a, mut b) = (self.lo, self.hi);
        let mut x = self.lo + u * (self.hi - self.lo);
        for _ in 0..100 {
            let g = self.mass(x) - target;
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let p = (self.pdf)(x);
            let mut next = if p > 0.0 { x - g / p } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || b - a <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

fn orthonormal_pair(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if n[0].abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (seed - n * n.dot(&seed)).normalize();
    (e1, n.cross(&e1))
}

/// Inverse CDF of the density `(1 + k mu)/2` on `[-1, 1]`.
fn sample_mu(k: f64, u: f64) -> f64 {
    if k.abs() < 1e-12 {
        return 2.0 * u - 1.0;
    }
    let c = 0.5 - 0.25 * k - u;
    let disc = (0.25 - k * c).max(0.0);
    ((-0.5 + disc.sqrt()) / (0.5 * k)).clamp(-1.0, 1.0)
}

fn uniform_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let cz: f64 = rng.random_range(-1.0..1.0);
    let ph: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - cz * cz).max(0.0).sqrt();
    Vector3::new(s * ph.cos(), s * ph.sin(), cz)
}

impl ParticleEnsemble {
    /// Stratified sampling of `f0 dx dv`: Latin-hypercube strata in `|x|` and `|v|`,
    /// isotropic `x/|x|` and the exact conditional law of `x.v/(|x||v|)`.
    pub fn sample(init: &InitialData, n: usize, seed: u64, tangents: bool) -> Result<Self, SimError> {
        init.validate()?;
        if n == 0 {
            return Err(SimError::InvalidParameter("particle count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm_r: Vec<usize> = (0..n).collect();
        let mut perm_w: Vec<usize> = (0..n).collect();
        perm_r.shuffle(&mut rng);
        perm_w.shuffle(&mut rng);
        let radial = InverseCdf::new(|r| init.a(r) * r * r, 0.0, init.radius);
        let speed = InverseCdf::new(|w| init.b(w) * w * w, init.v_low, init.v_high);
        let omega = init.epsilon / n as f64;
        let mut x = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let ur = (perm_r[i] as f64 + rng.random::<f64>()) / n as f64;
            let uw = (perm_w[i] as f64 + rng.random::<f64>()) / n as f64;
            let r = radial.invert(ur);
            let w = speed.invert(uw);
            let xh = uniform_direction(&mut rng);
            let mu = sample_mu(init.kappa * r / init.radius, rng.random());
            let ps: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (e1, e2) = orthonormal_pair(&xh);
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            let vh = xh * mu + (e1 * ps.cos() + e2 * ps.sin()) * st;
            x.push(xh * r);
            v.push(vh * w);
        }
        let f0: Vec<f64> = x.par_iter().zip(&v).map(|(x, v)| init.f0(x, v)).collect();
        let grad_f0 = x.par_iter().zip(&v).map(|(x, v)| init.grad_f0(x, v)).collect();
        if let Some(index) = f0.iter().position(|f| *f == 0.0) {
            return Err(SimError::ZeroDensitySample { index });
        }
        Ok(Self {
            t: 0.0,
            weight: vec![omega; n],
            x0: x.clone(),
            v0: v.clone(),
            x,
            v,
            f0,
            grad_f0,
            tangent: tangents.then(|| vec![Matrix6::identity(); n]),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_charge(&self) -> f64 {
        chunked_sum(self.len(), |i| self.weight[i])
    }

    pub fn min_speed(&self) -> f64 {
        chunked_min(self.len(), |i| self.v[i].norm())
    }

    pub fn kinetic_energy(&self) -> f64 {
        chunked_sum(self.len(), |i| self.weight[i] * self.v[i].norm())
    }

    /// Linear (cloud-in-cell) assignment in `r`, normalised by the node volumes.
    pub fn deposit(&self, grid: &RadialGrid) -> Deposit {
        let nn = grid.n_nodes();
        let acc = chunked_fold(self.len(), nn + 1, |i, acc| {
            let w = self.weight[i];
            match grid.locate(self.x[i].norm()) {
                Some((j, th)) => {
                    acc[j] += w * (1.0 - th);
                    acc[j + 1] += w * th;
                }
                None => acc[nn] += w,
            }
        });
        let rho = (0..nn).map(|j| acc[j] / grid.node_volume(j)).collect();
        Deposit { rho, overflow: acc[nn] }
    }

    /// Field of the current positions.
    pub fn solve(&self, grid: &RadialGrid) -> (RadialField, f64) {
        let d = self.deposit(grid);
        (solve_field(*grid, &d.rho), d.overflow)
    }

    /// `V <- V + h chi(|V|) sigma E x/|x|`, with the exact Jacobian of the map applied to the tangent.
    pub fn kick(&mut self, field: &RadialField, sigma: f64, h: f64) {
        let kick_one = |x: &Vector3<f64>, v: &mut Vector3<f64>, d: Option<&mut Matrix6<f64>>| {
            let (e, de) = field.field_at(x.norm());
            let (f, df) = radial_force(sigma, e, de, x);
            let w = v.norm();
            if let Some(d) = d {
                let a: Matrix3<f64> = df * (h * chi(w));
                let b: Matrix3<f64> = Matrix3::identity() + f * (*v / w).transpose() * (h * chi_prime(w));
                let top = d.fixed_view::<3, 6>(0, 0).into_owned();
                let bottom = d.fixed_view::<3, 6>(3, 0).into_owned();
                d.fixed_view_mut::<3, 6>(3, 0).copy_from(&(a * top + b * bottom));
            }
            *v += f * (h * chi(w));
        };
        match self.tangent.as_mut() {
            Some(tan) => self
                .x
                .par_iter()
                .zip(self.v.par_iter_mut())
                .zip(tan.par_iter_mut())
                .for_each(|((x, v), d)| kick_one(x, v, Some(d))),
            None => self
                .x
                .par_iter()
                .zip(self.v.par_iter_mut())
                .for_each(|(x, v)| kick_one(x, v, None)),
        }
    }

    /// `X <- X + dt V/|V|`.
    pub fn drift(&mut self, dt: f64) {
        let drift_one = |x: &mut Vector3<f64>, v: &Vector3<f64>, d: Option<&mut Matrix6<f64>>| {
            let w = v.norm();
            if let Some(d) = d {
                let p = projector(v) * dt;
                let bottom = d.fixed_view::<3, 6>(3, 0).into_owned();
                let top = d.fixed_view::<3, 6>(0, 0).into_owned() + p * bottom;
                d.fixed_view_mut::<3, 6>(0, 0).copy_from(&top);
            }
            *x += v * (dt / w);
        };
        match self.tangent.as_mut() {
            Some(tan) => self
                .x
                .par_iter_mut()
                .zip(self.v.par_iter())
                .zip(tan.par_iter_mut())
                .for_each(|((x, v), d)| drift_one(x, v, Some(d))),
            None => self
                .x
                .par_iter_mut()
                .zip(self.v.par_iter())
                .for_each(|(x, v)| drift_one(x, v, None)),
        }
        self.t += dt;
    }

    /// One kick-drift-kick step. `field` must be the field of the current positions;
    /// the returned field is that of the new positions.
    pub fn step(
        &mut self,
        grid: &RadialGrid,
        field: &RadialField,
        dt: f64,
        sigma: f64,
    ) -> Result<(RadialField, f64), SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        self.kick(field, sigma, 0.5 * dt);
        self.drift(dt);
        let (next, overflow) = self.solve(grid);
        self.kick(&next, sigma, 0.5 * dt);
        Ok((next, overflow))
    }

    /// `sum_p omega_p |V_p| + (sigma/2) 4 pi int E^2 r^2 dr`.
    pub fn energy(&self, field: &RadialField, sigma: f64) -> f64 {
        self.kinetic_energy() + 0.5 * sigma * field.field_energy()
    }

    /// Largest drift of `X_p x V_p` from its initial value, relative to `|X_0||V_0|`.
    pub fn angular_momentum_drift(&self) -> f64 {
        crate::reduce::chunked_max(self.len(), |i| {
            let l0 = self.x0[i].cross(&self.v0[i]);
            let l = self.x[i].cross(&self.v[i]);
            (l - l0).norm() / (self.x0[i].norm() * self.v0[i].norm()).max(1e-300)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::charge;
    use approx::assert_relative_eq;

    fn small() -> ParticleEnsemble {
        ParticleEnsemble::sample(&InitialData::default(), 2000, 7, true).unwrap()
    }

    #[test]
    fn sampling_is_reproducible_and_supported() {
        let a = small();
        let b = small();
        assert_eq!(a, b);
        assert!(a.min_speed() >= 2.0);
        assert!(a.x.iter().all(|x| x.norm() < 2.0));
        assert_relative_eq!(a.total_charge(), InitialData::default().epsilon, max_relative = 1e-12);
    }

    #[test]
    fn inverse_cdf_roundtrip() {
        let c = InverseCdf::new(|r: f64| r * r, 0.0, 2.0);
        for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let x = c.invert(u);
            assert_relative_eq!(x, 2.0 * u.cbrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn mu_sampler_matches_cdf() {
        for k in [-0.6, 0.0, 0.3] {
            for u in [0.05, 0.5, 0.95] {
                let m = sample_mu(k, u);
                let cdf = 0.5 * ((m + 1.0) + 0.5 * k * (m * m - 1.0));
                assert_relative_eq!(cdf, u, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_particle_deposit_conserves_weight() {
        let mut e = small();
        e.x.truncate(1);
        e.v.truncate(1);
        e.weight = vec![1.0];
        e.x[0] = Vector3::new(0.5, 0.0, 0.0);
        let grid = RadialGrid::new(4.0, 40);
        let d = e.deposit(&grid);
        assert_relative_eq!(charge(grid, &d.rho), 1.0, max_relative = 1e-14);
        assert_eq!(d.overflow, 0.0);
    }

    #[test]
    fn zero_force_step_is_free_flow() {
        let mut e = small();
        let start = e.clone();
        let grid = RadialGrid::new(50.0, 200);
        let (field, _) = e.solve(&grid);
        e.step(&grid, &field, 0.1, 0.0).unwrap();
        for i in 0..e.len() {
            let w = start.v[i].norm();
            let x = start.x[i] + start.v[i] * (0.1 / w);
            assert!((e.x[i] - x).norm() < 1e-14);
            assert_eq!(e.v[i], start.v[i]);
        }
    }

    #[test]
    fn step_keeps_charge_and_angular_momentum() {
        let mut e = small();
        let grid = RadialGrid::new(50.0, 500);
        let (mut field, _) = e.solve(&grid);
        let q0 = field.q;
        for _ in 0..20 {
            field = e.step(&grid, &field, 0.05, 1.0).unwrap().0;
        }
        assert_relative_eq!(field.q, q0, max_relative = 1e-12);
        assert!(e.angular_momentum_drift() < 1e-12);
    }
}
