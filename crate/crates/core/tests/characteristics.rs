use nalgebra::{Matrix6, Vector3};
use proptest::prelude::*;
use rvp_core::characteristics::{free_flow, integrate_to, push, RadialFn, ZeroField};
use rvp_core::phasegeom::eval_weight;
use rvp_core::{CharState, FieldSource, Trajectory, WeightId};

/// Smooth attracting or repelling radial field with an optional slow time modulation.
fn plummer_modulated(sigma: f64, a: f64, wobble: f64) -> RadialFn<impl Fn(f64, f64) -> (f64, f64) + Sync> {
    RadialFn {
        sigma,
        profile: move |t: f64, r: f64| {
            let m = a * (1.0 + wobble * (0.3 * t).sin());
            let q = 1.0 + r * r;
            (m * r / q.powf(1.5), m * (q.powf(-1.5) - 3.0 * r * r * q.powf(-2.5)))
        },
    }
}

fn plummer(sigma: f64, a: f64) -> RadialFn<impl Fn(f64, f64) -> (f64, f64) + Sync> {
    plummer_modulated(sigma, a, 0.1)
}

fn state() -> impl Strategy<Value = CharState> {
    (
        0.0f64..5.0,
        prop::array::uniform3(-10.0f64..10.0),
        prop::array::uniform3(-5.0f64..5.0),
    )
        .prop_filter("speed away from the cutoff", |(_, _, v)| {
            let w = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            (1.5..6.0).contains(&w)
        })
        .prop_map(|(t, x, v)| CharState::new(t, x, v))
}

fn flow(s: &CharState, field: &dyn FieldSource, t1: f64) -> [f64; 6] {
    let e = integrate_to(s, field, t1, 0.01).unwrap();
    [e.x[0], e.x[1], e.x[2], e.v[0], e.v[1], e.v[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rk4_free_flow_is_exact(s in state(), n in 1usize..200, dt in 0.001f64..0.2) {
        let mut cur = s;
        for _ in 0..n {
            cur = push(&cur, &ZeroField, dt).unwrap();
        }
        let exact = free_flow(&s, n as f64 * dt).unwrap();
        for k in 0..3 {
            prop_assert!((cur.x[k] - exact.x[k]).abs() <= 1e-12 * (1.0 + exact.x[k].abs()));
            prop_assert_eq!(cur.v[k], exact.v[k]);
        }
    }

    #[test]
    fn free_flow_composes(s in state(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let two = free_flow(&free_flow(&s, a).unwrap(), b).unwrap();
        let one = free_flow(&s, a + b).unwrap();
        prop_assert!((two.x - one.x).norm() <= 1e-12 * (1.0 + one.x.norm()));
    }

    #[test]
    fn forward_then_backward_returns(s in state(), sigma in prop::sample::select(vec![-1.0, 1.0]), span in 0.5f64..10.0) {
        let field = plummer_modulated(sigma, 0.5, 0.0);
        let fwd = integrate_to(&s, &field, s.t + span, 0.01).unwrap();
        let back = integrate_to(&fwd, &field, s.t, 0.01).unwrap();
        prop_assert!((back.x - s.x).norm() <= 1e-9 * (1.0 + s.x.norm()));
        prop_assert!((back.v - s.v).norm() <= 1e-9 * (1.0 + s.v.norm()));
    }

    #[test]
    fn phase_volume_is_preserved(s in state(), sigma in prop::sample::select(vec![-1.0, 1.0])) {
        let field = plummer(sigma, 0.3);
        let end = integrate_to(&s.with_tangent(), &field, s.t + 5.0, 0.01).unwrap();
        let v_min = Trajectory::integrate(s, &field, 0.01, 500).unwrap().min_speed().unwrap();
        prop_assume!(v_min > 1.0);
        let det = end.tangent.unwrap().determinant();
        prop_assert!((det - 1.0).abs() <= 1e-6, "det {det}");
    }
}

#[test]
fn weights_are_conserved_without_force() {
    let starts = [
        CharState::new(0.0, [1.0, -2.0, 0.5], [0.3, 2.0, -1.0]),
        CharState::new(0.0, [-7.0, 0.1, 3.0], [-4.0, -0.2, 0.7]),
        CharState::new(0.0, [0.0, 0.0, 0.2], [0.0, 0.1, 0.0]),
    ];
    let mut ids = WeightId::K0.to_vec();
    ids.push(WeightId::Morawetz);
    for s in starts {
        let tr = Trajectory::integrate(s, &ZeroField, 0.05, 2000).unwrap();
        for id in &ids {
            let series = tr.weight_series(*id).unwrap();
            let w0 = series[0];
            for w in &series {
                assert!((w - w0).abs() <= 1e-10 * (1.0 + w0.abs()), "{id}: {w} vs {w0}");
            }
        }
    }
}

#[test]
fn tangent_matches_finite_difference_jacobian() {
    let field = plummer(-1.0, 0.8);
    for s in [
        CharState::new(0.0, [0.5, -0.3, 0.2], [2.0, 0.5, -0.4]),
        CharState::new(1.0, [-2.0, 1.0, 0.0], [-0.5, 1.5, 1.0]),
    ] {
        let end = integrate_to(&s.with_tangent(), &field, s.t + 4.0, 0.01).unwrap();
        let d = end.tangent.unwrap();
        let h = 1e-5;
        let mut fd = Matrix6::zeros();
        for k in 0..6 {
            let shifted = |sign: f64| {
                let mut q = s;
                if k < 3 {
                    q.x[k] += sign * h;
                } else {
                    q.v[k - 3] += sign * h;
                }
                flow(&q, &field, s.t + 4.0)
            };
            let (p, m) = (shifted(1.0), shifted(-1.0));
            for i in 0..6 {
                fd[(i, k)] = (p[i] - m[i]) / (2.0 * h);
            }
        }
        let err = (d - fd).abs().max();
        assert!(err <= 1e-6, "max |D - FD| = {err}");
    }
}

#[test]
fn radial_force_keeps_angular_momentum() {
    let field = plummer(1.0, 0.5);
    let s = CharState::new(0.0, [1.0, 2.0, -0.5], [1.0, -1.5, 0.8]);
    let l0 = s.x.cross(&s.v);
    let tr = Trajectory::integrate(s, &field, 0.05, 1000).unwrap();
    for st in &tr.states {
        let l: Vector3<f64> = st.x.cross(&st.v);
        assert!((l - l0).norm() <= 1e-8 * l0.norm());
    }
}

#[test]
fn scaling_weight_is_not_conserved_under_force() {
    let field = plummer(-1.0, 0.8);
    let s = CharState::new(0.0, [0.5, 0.0, 0.0], [0.0, 2.0, 0.0]);
    let tr = Trajectory::integrate(s, &field, 0.05, 100).unwrap();
    let series = tr.weight_series(WeightId::S).unwrap();
    let s0 = eval_weight(WeightId::S, &s.point()).unwrap();
    assert!(series.iter().any(|w| (w - s0).abs() > 1e-3));
}
