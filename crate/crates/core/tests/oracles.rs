mod common;

use std::f64::consts::PI;

use common::{fm_control, quaternion, random_fm, trapezoid};
use noisepulse::conditions::{evaluate_conditions, ConditionPolicy, NoiseModel, Reduction};
use noisepulse::io::catalog;
use noisepulse::numerics::integrate_adaptive;
use noisepulse::pulse::{FmPulse, PiecewiseAm, PulseSpec};
use noisepulse::trajectory::{derivatives_spherical, propagate, PropagationPolicy};
use noisepulse::verify::{fit_slope, geometric_scales, magnus_reconstruction, SimGrid};
use noisepulse::QuadraturePolicy;

#[test]
fn residuals_match_brute_force_trapezoid() {
    let policy = ConditionPolicy::default();
    for seed in 0..10 {
        let p = random_fm(seed);
        let r = evaluate_conditions(&PulseSpec::Fm(p.clone()), 2, &NoiseModel::unit_general(), Reduction::Full, &policy).unwrap();
        let b = trapezoid(|t| fm_control(p.amplitude, &p.coefficients, t), 1_000_000);
        let (w, q) = quaternion(&b.end);
        let qn = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let mut expect = vec![
            ("mu1_1", b.first[0][2]),
            ("mu1_2", b.first[1][2]),
            ("mu1_3", b.first[2][2]),
            ("angle", 2.0 * qn.atan2(w) - PI),
            ("axis_theta", -(q[2] / qn).asin()),
        ];
        for g in 0..3 {
            expect.push((["mu2_1", "mu2_2", "mu2_3"][g], b.second[g][0] + b.second[g][1]));
            expect.push((["mu2_4", "mu2_5", "mu2_6"][g], b.second[g][2]));
        }
        for (name, v) in expect {
            let got = r.get(name).unwrap();
            assert!((got - v).abs() < 1e-8, "seed {seed} {name}: {got} vs {v}");
        }
    }
}

#[test]
fn simulation_matches_magnus_reconstruction_to_third_order() {
    let policy = QuadraturePolicy::default();
    for seed in 100..103 {
        let p = random_fm(seed);
        let spec = PulseSpec::Fm(p);
        let grid = SimGrid::new(&spec, 2000).unwrap();
        let pts: Vec<(f64, f64, f64)> = geometric_scales(0.0015, 0.05, 6)
            .into_iter()
            .map(|l| {
                let (_, uc) = grid.simulate_static(&[0.0, 0.0, l]);
                let m = magnus_reconstruction(&spec, l, &policy).unwrap();
                let d = (uc.w - m.w).powi(2) + (0..3).map(|k| (uc.q[k] - m.q[k]).powi(2)).sum::<f64>();
                (l, d.sqrt(), 0.0)
            })
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 0.3, "seed {seed}: slope {}", fit.slope);
    }
}

#[test]
fn adaptive_quadrature_matches_fine_slicing() {
    let f = |t: f64| (40.0 * PI * t + 3.0 * (2.0 * PI * t).sin()).cos();
    let q = integrate_adaptive(f, 0.0, 1.0, &QuadraturePolicy::default()).unwrap();
    let n = 10_000_000;
    let h = 1.0 / n as f64;
    let brute = h * ((1..n).map(|k| f(k as f64 * h)).sum::<f64>() + 0.5 * (f(0.0) + f(1.0)));
    assert!((q.value[0] - brute).abs() < 1e-10, "{} vs {brute}", q.value[0]);
}

#[test]
fn spherical_derivatives_match_finite_differences() {
    let p = FmPulse { theta: PI, amplitude: 4.0, coefficients: vec![(1, 0.3), (2, -0.8), (3, 0.2)], switching_time: None };
    let spec = PulseSpec::Fm(p.clone());
    let traj = propagate(&spec, &PropagationPolicy::default()).unwrap();
    let h = 1e-3;
    let unwrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
    for &t in &[0.13, 0.41, 0.77] {
        let (dpsi, dphi, dtheta) = derivatives_spherical(&traj.state(t), p.phase(t), p.amplitude).unwrap();
        let at = |k: f64| traj.state(t + k * h).angles();
        let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        let stencil = |f: &dyn Fn((f64, f64, f64)) -> f64| {
            (8.0 * unwrap(f(p1) - f(m1)) - unwrap(f(p2) - f(m2))) / (12.0 * h)
        };
        let fd = [stencil(&|a| a.0), stencil(&|a| a.1), stencil(&|a| a.2)];
        for (name, exact, approx) in [("psi", dpsi, fd[0]), ("phi", dphi, fd[1]), ("theta", dtheta, fd[2])] {
            assert!((exact - approx).abs() < 1e-6, "{name}' at {t}: {exact} vs {approx}");
        }
    }
}

#[test]
fn azimuth_rate_tends_to_half_the_phase_rate_at_the_start() {
    let p = FmPulse { theta: PI, amplitude: 4.0, coefficients: vec![(1, 0.3), (2, -0.8), (3, 0.2)], switching_time: None };
    let traj = propagate(&PulseSpec::Fm(p.clone()), &PropagationPolicy::default()).unwrap();
    let omega_rate = 2.0 * PI * 0.3 + 4.0 * PI * 0.2;
    let t = 1e-5;
    let (_, dphi, _) = derivatives_spherical(&traj.state(t), p.phase(t), p.amplitude).unwrap();
    assert!((dphi - omega_rate / 2.0).abs() < 1e-3, "{dphi} vs {}", omega_rate / 2.0);
}

#[test]
fn unshaped_pulse_first_order_residual_is_two_over_pi() {
    let spec = PulseSpec::PiecewiseAm(PiecewiseAm::unshaped(PI));
    let r = evaluate_conditions(&spec, 1, &NoiseModel::unit_dephasing(), Reduction::Full, &ConditionPolicy::default()).unwrap();
    assert!((r.get("mu1_1").unwrap() - 2.0 / PI).abs() < 1e-14);
}

#[test]
fn noiseless_table2_pulse_is_a_transverse_half_turn() {
    let spec = catalog::find("table2-fm1-pi").unwrap().spec;
    let grid = SimGrid::new(&spec, 1000).unwrap();
    let (up, uc) = grid.simulate_static(&[0.0; 3]);
    assert!((uc.w - 1.0).abs() < 1e-6 && uc.q.iter().all(|x| x.abs() < 1e-6));
    let angle = 2.0 * (up.q[0].hypot(up.q[1]).hypot(up.q[2])).atan2(up.w);
    assert!((angle - PI).abs() < 1e-6, "angle {angle}");
    assert!(up.q[2].abs() < 1e-6, "axis leaves the xy plane: {:?}", up.q);
}
