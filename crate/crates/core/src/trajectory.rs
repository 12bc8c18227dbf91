//! Propagation of the pulse rotation `P(t)` and the toggling-frame matrix.

use crate::error::{Error, Result};
use crate::kernel::{RotationState, Su2};
use crate::numerics::ode::{hermite, integrate_rk4, Node, StepControl};
use crate::pulse::{ControlField, PulseSpec};
use crate::vec3::{cross, dot, Mat3, Vec3};

#[derive(Debug, Clone, Copy)]
pub struct PropagationPolicy {
    pub step: StepControl<f64>,
    /// Uniform quadrature panels per unit time, merged with control breakpoints.
    pub panels_per_unit: usize,
}

impl Default for PropagationPolicy {
    fn default() -> Self {
        Self { step: StepControl::default(), panels_per_unit: 16 }
    }
}

/// Time-resolved rotation of a pulse on `[0, duration]`.
#[derive(Debug, Clone)]
pub enum RotationTrajectory {
    /// AM pulses rotate about the fixed y axis with a closed-form angle.
    FixedAxis { spec: PulseSpec, panels: Vec<f64> },
    /// Dense output of the quaternion equation of motion.
    Sampled { nodes: Vec<Node<f64, 4>>, panels: Vec<f64> },
}

/// `dP/dt = -i (v.sigma) P` for `P = q0 - i q.sigma`.
#[inline]
pub fn quaternion_rate(v: &Vec3<f64>, y: &[f64; 4]) -> [f64; 4] {
    let q = [y[1], y[2], y[3]];
    let c = cross(v, &q);
    [-dot(v, &q), y[0] * v[0] + c[0], y[0] * v[1] + c[1], y[0] * v[2] + c[2]]
}

fn panel_grid(field: &dyn ControlField, per_unit: usize) -> Vec<f64> {
    let d = field.duration();
    let n = ((per_unit as f64 * d).round() as usize).max(1);
    let mut p: Vec<f64> = (0..=n).map(|k| d * k as f64 / n as f64).collect();
    p.extend(field.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < d));
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    p
}

/// Numerically propagates any control field.
pub fn propagate_field(field: &dyn ControlField, policy: &PropagationPolicy) -> Result<RotationTrajectory> {
    let panels = panel_grid(field, policy.panels_per_unit);
    let nodes = integrate_rk4(
        |t, y: &[f64; 4]| quaternion_rate(&field.control(t), y),
        [1.0, 0.0, 0.0, 0.0],
        &panels,
        &policy.step,
        |y| {
            let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]).sqrt();
            y.iter_mut().for_each(|v| *v /= n);
        },
    )?;
    Ok(RotationTrajectory::Sampled { nodes, panels })
}

/// Trajectory of a pulse: closed form for AM, numerical otherwise.
pub fn propagate(spec: &PulseSpec, policy: &PropagationPolicy) -> Result<RotationTrajectory> {
    spec.validate()?;
    if spec.is_amplitude_modulated() {
        let panels = panel_grid(spec, policy.panels_per_unit);
        return Ok(RotationTrajectory::FixedAxis { spec: spec.clone(), panels });
    }
    propagate_field(spec, policy)
}

impl RotationTrajectory {
    pub fn duration(&self) -> f64 {
        *self.panels().last().unwrap()
    }

    /// Quadrature panel boundaries, including every control breakpoint.
    pub fn panels(&self) -> &[f64] {
        match self {
            RotationTrajectory::FixedAxis { panels, .. } | RotationTrajectory::Sampled { panels, .. } => panels,
        }
    }

    pub fn su2(&self, t: f64) -> Su2<f64> {
        match self {
            RotationTrajectory::FixedAxis { spec, .. } => {
                let psi = match spec {
                    PulseSpec::PiecewiseAm(p) => p.psi(t),
                    PulseSpec::ContinuousAm(p) => p.psi(t),
                    _ => unreachable!("fixed-axis trajectories hold AM pulses"),
                };
                let (s, c) = (psi / 2.0).sin_cos();
                Su2 { w: c, q: [0.0, s, 0.0] }
            }
            RotationTrajectory::Sampled { nodes, .. } => {
                let k = nodes.partition_point(|n| n.t <= t).clamp(1, nodes.len() - 1);
                let y = hermite(&nodes[k - 1], &nodes[k], t);
                Su2 { w: y[0], q: [y[1], y[2], y[3]] }
            }
        }
    }

    /// Rotation angle for AM pulses, unwrapped beyond `2 pi`.
    pub fn am_angle(&self, t: f64) -> Option<f64> {
        match self {
            RotationTrajectory::FixedAxis { spec: PulseSpec::PiecewiseAm(p), .. } => Some(p.psi(t)),
            RotationTrajectory::FixedAxis { spec: PulseSpec::ContinuousAm(p), .. } => Some(p.psi(t)),
            _ => None,
        }
    }

    pub fn toggling_matrix(&self, t: f64) -> Mat3<f64> {
        self.su2(t).toggling_matrix()
    }

    pub fn state(&self, t: f64) -> RotationState<f64> {
        match self.am_angle(t) {
            Some(psi) => RotationState::new(psi, crate::kernel::Axis::y_axis()),
            None => self.su2(t).rotation(),
        }
    }

    pub fn final_su2(&self) -> Su2<f64> {
        match self {
            RotationTrajectory::Sampled { nodes, .. } => {
                let y = nodes.last().unwrap().y;
                Su2 { w: y[0], q: [y[1], y[2], y[3]] }
            }
            _ => self.su2(self.duration()),
        }
    }

    /// Number of accepted integration steps (zero for closed forms).
    pub fn steps(&self) -> usize {
        match self {
            RotationTrajectory::Sampled { nodes, .. } => nodes.len() - 1,
            _ => 0,
        }
    }
}

/// Equations of motion of `(psi, phi, theta)` under the drive
/// `amplitude (cos omega, sin omega, 0)`. Singular where `sin(psi/2) = 0` or
/// `sin(theta) = 0`.
pub fn derivatives_spherical(state: &RotationState<f64>, omega: f64, amplitude: f64) -> Result<(f64, f64, f64)> {
    let (psi, phi, theta) = state.angles();
    let (sh, ch) = (psi / 2.0).sin_cos();
    let (st, ct) = theta.sin_cos();
    if sh.abs() < 1e-9 || st.abs() < 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "spherical chart is singular at psi = {psi}, theta = {theta}"
        )));
    }
    let (sd, cd) = (omega - phi).sin_cos();
    let dpsi = 2.0 * amplitude * st * (omega.sin() * phi.sin() + omega.cos() * phi.cos());
    let dphi = amplitude * (ch * sd - sh * ct * cd) / (sh * st);
    let dtheta = amplitude * (ch * ct * cd + sh * sd) / sh;
    Ok((dpsi, dphi, dtheta))
}

/// One row of a trajectory dump: `t, psi, phi, theta, a_x, a_y, a_z`.
pub fn dump_row(traj: &RotationTrajectory, t: f64) -> [f64; 7] {
    let s = traj.state(t);
    let (psi, phi, theta) = s.angles();
    let a = s.axis.as_array();
    [t, psi, phi, theta, a[0], a[1], a[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{FmPulse, PiecewiseAm};
    use core::f64::consts::PI;

    #[test]
    fn constant_drive_matches_closed_form() {
        let spec = PulseSpec::Fm(FmPulse { theta: PI, amplitude: 2.0, coefficients: vec![], switching_time: None });
        let traj = propagate(&spec, &PropagationPolicy::default()).unwrap();
        for t in [0.0, 0.31, 0.77, 1.0] {
            let p = traj.su2(t);
            assert!((p.w - (2.0 * t).cos()).abs() < 1e-12);
            assert!((p.q[0] - (2.0 * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn am_closed_form_agrees_with_numerical_propagation() {
        let spec = PulseSpec::PiecewiseAm(PiecewiseAm::symmetric(PI, 0.07623078, 0.26784319, 6.72572865));
        let exact = propagate(&spec, &PropagationPolicy::default()).unwrap();
        let numeric = propagate_field(&spec, &PropagationPolicy::default()).unwrap();
        for t in [0.05, 0.2, 0.5, 0.9, 1.0] {
            let (a, b) = (exact.su2(t), numeric.su2(t));
            assert!((a.w - b.w).abs() < 1e-12 && (a.q[1] - b.q[1]).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn drive_along_axis_only_grows_psi() {
        let state = RotationState::from_angles(1.0, 0.4, PI / 2.0);
        let (dpsi, dphi, dtheta) = derivatives_spherical(&state, 0.4, 3.0).unwrap();
        assert!((dpsi - 6.0).abs() < 1e-14);
        assert!(dphi.abs() < 1e-14 && dtheta.abs() < 1e-14);
        assert!(derivatives_spherical(&RotationState::from_angles(0.0, 0.0, 1.0), 0.0, 1.0).is_err());
    }
}
