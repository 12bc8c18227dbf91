mod common;

use std::f64::consts::PI;

use noisepulse::conditions::{evaluate_conditions, ConditionPolicy, NoiseModel, Reduction};
use noisepulse::kernel::{magnus_term, Su2};
use noisepulse::pulse::{envelope, ControlField, FmPulse, PiecewiseAm, PulseSpec};
use noisepulse::trajectory::{propagate, PropagationPolicy};
use noisepulse::verify::SimGrid;
use noisepulse::vec3::{mat_mul, transpose};
use noisepulse::{QuadraturePolicy, RotationState};
use proptest::prelude::*;

fn su2() -> impl Strategy<Value = Su2<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(w, x, y, z)| {
            let n = (w * w + x * x + y * y + z * z).sqrt();
            Su2 { w: w / n, q: [x / n, y / n, z / n] }
        })
}

fn fm_pulse(max_k: usize) -> impl Strategy<Value = FmPulse> {
    (1.0..8.0f64, prop::collection::vec(-1.0..1.0f64, max_k), prop::option::of(0.01..0.5f64)).prop_map(|(v0, b, ts)| FmPulse {
        theta: PI,
        amplitude: v0,
        coefficients: b.into_iter().enumerate().map(|(i, x)| (i + 1, x)).collect(),
        switching_time: ts,
    })
}

fn det(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn max_diff(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    (0..9).map(|k| (a[k / 3][k % 3] - b[k / 3][k % 3]).abs()).fold(0.0, f64::max)
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn as_matrix(u: &Su2<f64>) -> common::M2 {
    use num_complex::Complex64 as C;
    [
        [C::new(u.w, -u.q[2]), C::new(-u.q[1], -u.q[0])],
        [C::new(u.q[1], -u.q[0]), C::new(u.w, u.q[2])],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn toggling_matrix_is_a_proper_rotation(u in su2()) {
        let d = u.toggling_matrix();
        prop_assert!(max_diff(&mat_mul(&transpose(&d), &d), &IDENTITY) < 1e-13);
        prop_assert!((det(&d) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn toggling_matrix_matches_pauli_conjugation(u in su2()) {
        prop_assert!(max_diff(&u.toggling_matrix(), &common::toggling(&as_matrix(&u))) < 1e-13);
    }

    #[test]
    fn toggling_matrix_is_a_homomorphism(a in su2(), b in su2()) {
        // (ab)^dag s (ab) = b^dag (a^dag s a) b, so D(ab) = D(b) D(a)
        let lhs = a.mul(&b).toggling_matrix();
        let rhs = mat_mul(&b.toggling_matrix(), &a.toggling_matrix());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn rotation_round_trip(u in su2()) {
        let r = u.rotation();
        let v = Su2::from_rotation(&r);
        prop_assert!((v.w - u.w).abs() < 1e-12 && (0..3).all(|k| (v.q[k] - u.q[k]).abs() < 1e-12));
        let d = RotationState::from_angles(r.psi, r.angles().1, r.angles().2).matrix();
        prop_assert!(max_diff(&d, &r.matrix()) < 1e-12);
    }

    #[test]
    fn fm_control_has_constant_magnitude(p in fm_pulse(6), t in 0.0..1.0f64) {
        let flat = FmPulse { switching_time: None, ..p };
        let v = PulseSpec::Fm(flat.clone()).control(t);
        prop_assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - flat.amplitude).abs() < 1e-12);
        prop_assert_eq!(v[2], 0.0);
    }

    #[test]
    fn envelope_boundary_values(ts in 0.001..0.5f64, t in 0.0..1.0f64) {
        let s = Some(ts);
        prop_assert_eq!(envelope(0.0, s), 0.0);
        prop_assert!((envelope(ts, s) - 1.0).abs() < 1e-15);
        prop_assert!((envelope(1.0 - ts, s) - 1.0).abs() < 1e-15);
        prop_assert!(envelope(1.0, s).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&envelope(t, s)));
        prop_assert!((envelope(t, s) - envelope(1.0 - t, s)).abs() < 1e-12);
    }

    #[test]
    fn propagator_stays_unitary(p in fm_pulse(4)) {
        let traj = propagate(&PulseSpec::Fm(p), &PropagationPolicy::default()).unwrap();
        for k in 0..=20 {
            let u = traj.su2(k as f64 / 20.0);
            prop_assert!((u.w * u.w + u.q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn simulation_is_unitary(p in fm_pulse(4), eta in prop::array::uniform3(-2.0..2.0f64), slices in 10usize..300) {
        let grid = SimGrid::new(&PulseSpec::Fm(p), slices).unwrap();
        let (up, uc) = grid.simulate_static(&eta);
        for u in [up, uc] {
            prop_assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn magnus_terms_are_homogeneous_in_the_noise(p in fm_pulse(3), c in 0.1..5.0f64) {
        let traj = propagate(&PulseSpec::Fm(FmPulse { switching_time: None, ..p }), &PropagationPolicy::default()).unwrap();
        let q = QuadraturePolicy::default();
        let n = NoiseModel::dephasing(0.7, 0.4);
        let scaled = NoiseModel::dephasing(0.7 * c, 0.4 * c * c);
        let (h1, h1s) = (magnus_term(1, &traj, &n, &q).unwrap(), magnus_term(1, &traj, &scaled, &q).unwrap());
        let (h2, h2s) = (magnus_term(2, &traj, &n, &q).unwrap(), magnus_term(2, &traj, &scaled, &q).unwrap());
        for k in 0..3 {
            prop_assert!((h1s[k] - c * h1[k]).abs() < 1e-10);
            prop_assert!((h2s[k] - c * c * h2[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn residuals_do_not_depend_on_the_noise_scale(p in fm_pulse(3), eta in 0.1..3.0f64, var in 0.1..3.0f64) {
        let spec = PulseSpec::Fm(FmPulse { switching_time: None, ..p });
        let policy = ConditionPolicy::default();
        let a = evaluate_conditions(&spec, 2, &NoiseModel::unit_dephasing(), Reduction::Full, &policy).unwrap();
        let b = evaluate_conditions(&spec, 2, &NoiseModel::dephasing(eta, var), Reduction::Full, &policy).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn even_fm_pulses_end_on_the_equator(v0 in 1.0..8.0f64, b in prop::collection::vec(-1.0..1.0f64, 3)) {
        let p = FmPulse {
            theta: PI,
            amplitude: v0,
            coefficients: b.iter().enumerate().map(|(i, x)| (2 * i + 2, *x)).collect(),
            switching_time: None,
        };
        let end = propagate(&PulseSpec::Fm(p), &PropagationPolicy::default()).unwrap().final_su2();
        let n = end.q.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        prop_assert!((end.q[2] / n).abs() < 1e-9);
    }

    #[test]
    fn piecewise_angle_is_the_signed_area(v0 in 0.5..10.0f64, t1 in 0.01..0.24f64, t2 in 0.26..0.49f64) {
        let p = PiecewiseAm::symmetric(PI, t1, t2, v0);
        let area = 2.0 * v0 * (2.0 * t1 - 2.0 * (t2 - t1) + (1.0 - 2.0 * t2));
        prop_assert!((p.psi(1.0) - area).abs() < 1e-12);
    }
}

#[test]
fn halving_the_step_bound_leaves_the_final_angle() {
    let p = FmPulse { theta: PI, amplitude: 6.0, coefficients: vec![(1, 0.4), (2, -0.9), (4, 0.3), (5, -0.2)], switching_time: Some(0.1) };
    let spec = PulseSpec::Fm(p);
    let base = PropagationPolicy::default();
    let mut fine = base;
    fine.step.max_step /= 2.0;
    let a = propagate(&spec, &base).unwrap().final_su2().angle();
    let b = propagate(&spec, &fine).unwrap().final_su2().angle();
    assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
}
