use nalgebra::Vector3;
use proptest::prelude::*;
use rvp_core::characteristics::RadialFn;
use rvp_core::diagnostics::{
    charge_identity_check, charge_identity_oracle, commuted_value, energy_norm, free_stream_average, moment_profile,
    particle_commuted_value, value,
};
use rvp_core::phasegeom::{field_coefficients, PhasePoint};
use rvp_core::poisson::charge;
use rvp_core::quadrature::gauss_legendre_on;
use rvp_core::sim::run;
use rvp_core::{FieldId, InitialData, ParticleEnsemble, RadialField, RadialGrid, SimConfig};
use std::f64::consts::PI;

fn tilted() -> InitialData {
    InitialData {
        kappa: 0.4,
        ..InitialData::default()
    }
}

/// `int int f0 dx dv` by a product Gauss rule in spherical coordinates for `x` and `v`.
fn phase_space_mass(init: &InitialData) -> f64 {
    let rs = gauss_legendre_on(12, 0.0, init.radius);
    let ws = gauss_legendre_on(12, init.v_low, init.v_high);
    let mus = gauss_legendre_on(8, -1.0, 1.0);
    let phis = gauss_legendre_on(8, 0.0, 2.0 * PI);
    let dir = |mu: f64, phi: f64| {
        let s = (1.0 - mu * mu).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), mu)
    };
    let mut total = 0.0;
    for (r, wr) in &rs {
        for (mx, wmx) in &mus {
            for (px, wpx) in &phis {
                let x = dir(*mx, *px) * *r;
                let jx = wr * wmx * wpx * r * r;
                for (w, ww) in &ws {
                    for (mv, wmv) in &mus {
                        for (pv, wpv) in &phis {
                            let v = dir(*mv, *pv) * *w;
                            total += jx * ww * wmv * wpv * w * w * init.f0(&x, &v);
                        }
                    }
                }
            }
        }
    }
    total
}

#[test]
fn sampled_charge_matches_phase_space_quadrature() {
    let init = tilted();
    let oracle = phase_space_mass(&init);
    assert!((oracle - init.epsilon).abs() <= 1e-10 * init.epsilon, "{oracle}");
    let ens = ParticleEnsemble::sample(&init, 5000, 11, false).unwrap();
    assert!((ens.total_charge() - oracle).abs() <= 1e-12 * oracle);
}

#[test]
fn binned_profile_matches_free_stream_quadrature() {
    let init = InitialData::default();
    let grid = RadialGrid::new(40.0, 200);
    let mut ens = ParticleEnsemble::sample(&init, 100_000, 3, false).unwrap();
    let t = 10.0;
    ens.drift(t);
    let mu = moment_profile(&ens, &grid);
    let q = charge(grid, &mu);
    assert!((q - init.epsilon).abs() <= 1e-12 * init.epsilon);
    let h = grid.h();
    let shell = (t - init.radius - h)..=(t + init.radius + h);
    let oracle: Vec<f64> = (0..grid.n_nodes())
        .map(|j| {
            let r = grid.node(j);
            if !shell.contains(&r) {
                return 0.0;
            }
            let (xs, wts) = rvp_core::quadrature::gauss_legendre(8);
            let lo = (r - h).max(0.0);
            let mut num = 0.0;
            let mut den = 0.0;
            for (a, b) in [(lo, r), (r, r + h)] {
                for (x, w) in xs.iter().zip(&wts) {
                    let s = a + 0.5 * (b - a) * (1.0 + x);
                    let hat = 1.0 - (s - r).abs() / h;
                    let jw = 0.5 * (b - a) * w * hat * s * s;
                    num += jw * free_stream_average(&init, t, s);
                    den += jw;
                }
            }
            num / den
        })
        .collect();
    let peak = oracle.iter().cloned().fold(0.0, f64::max);
    let worst = mu.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.03 * peak, "max deviation {} of peak", worst / peak);
}

#[test]
fn commuted_values_match_finite_differences() {
    let init = tilted();
    let field = RadialFn {
        sigma: 1.0,
        profile: |t: f64, r: f64| {
            let m = 0.3 * (1.0 + 0.2 * (0.5 * t).sin());
            let q = 1.0 + r * r;
            (m * r / q.powf(1.5), m * (q.powf(-1.5) - 3.0 * r * r * q.powf(-2.5)))
        },
    };
    let p = PhasePoint::new(1.5, [0.4, 0.3, -0.2], [0.8, 2.1, -1.2]);
    let dt = 1e-3;
    let base = value(&p, &field, &init, dt).unwrap();
    assert!(base != 0.0);
    for id in FieldId::ALL {
        let exact = commuted_value(id, &p, &field, &init, dt).unwrap();
        let c = field_coefficients(id, &p);
        let h = 1e-4;
        let at = |s: f64| {
            let q = p.coords();
            let moved: Vec<f64> = (0..7).map(|k| q[k] + s * c[k]).collect();
            let pt = PhasePoint::new(moved[0], [moved[1], moved[2], moved[3]], [moved[4], moved[5], moved[6]]);
            value(&pt, &field, &init, dt).unwrap()
        };
        let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        let scale = fd.abs().max(base.abs());
        assert!((exact - fd).abs() <= 1e-4 * scale, "{id}: {exact} vs {fd}");
    }
}

#[test]
fn weighted_mass_is_constant_under_free_streaming() {
    let init = InitialData::default();
    let grid = RadialGrid::new(100.0, 2000);
    let zero = RadialField::zero(grid);
    let mut ens = ParticleEnsemble::sample(&init, 4000, 5, false).unwrap();
    let n0 = energy_norm(&ens, &zero, 0.0, 2, 0).unwrap().value;
    for _ in 0..4 {
        ens.drift(7.5);
        let n = energy_norm(&ens, &zero, 0.0, 2, 0).unwrap().value;
        assert!((n - n0).abs() <= 1e-10 * n0);
    }
}

#[test]
fn charge_identity_at_time_zero() {
    let init = tilted();
    assert!(charge_identity_oracle(&init) <= 1e-10);
    let grid = RadialGrid::new(100.0, 2000);
    let ens = ParticleEnsemble::sample(&init, 20_000, 2, true).unwrap();
    let mc = charge_identity_check(&ens, &RadialField::zero(grid), 0.0).unwrap();
    assert!(mc <= 0.01, "{mc}");
}

#[test]
fn rotations_vanish_along_self_consistent_runs() {
    let cfg = SimConfig {
        n_particles: 2000,
        t_final: 3.0,
        tangents: true,
        ..SimConfig::default()
    };
    let out = run(&cfg).unwrap();
    let ens = &out.ensemble;
    for i in (0..ens.len()).step_by(97) {
        let scale = ens.grad_f0[i].norm() * (ens.x[i].norm() + ens.v[i].norm() + 1.0);
        for id in [FieldId::Om12, FieldId::Om13, FieldId::Om23] {
            let z = particle_commuted_value(ens, i, id, &out.field, cfg.sigma).unwrap();
            assert!(z.abs() <= 1e-8 * scale.max(1e-300), "{id} at {i}: {z}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deposit_conserves_charge(seed in 0u64..1000, n in 1usize..400, r_max in 0.5f64..6.0, cells in 2usize..300, t in 0.0f64..8.0) {
        let init = InitialData::default();
        let mut ens = ParticleEnsemble::sample(&init, n, seed, false).unwrap();
        if t > 0.0 {
            ens.drift(t);
        }
        let grid = RadialGrid::new(r_max, cells);
        let dep = ens.deposit(&grid);
        let q = charge(grid, &dep.rho) + dep.overflow;
        prop_assert!((q - ens.total_charge()).abs() <= 1e-12 * ens.total_charge());
    }
}
