//! Residual vectors whose common root defines a pulse of a given order.

mod closed_form;
pub(crate) mod integrals;
mod system;

pub use closed_form::piecewise_integrals;
pub use system::{assemble_system, sensitivity_tolerance, Ansatz, Family, ResidualSystem, SystemDef};

use crate::error::{Error, Result};
use crate::kernel::Su2;
use crate::numerics::quadrature::QuadraturePolicy;
use crate::pulse::PulseSpec;
use crate::trajectory::{propagate, PropagationPolicy, RotationTrajectory};
use crate::vec3::{add, column, cross, dot, norm, scale, Mat3, Vec3};

/// Classical noise statistics. Transverse components share one variance and
/// have zero mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub eta_mean: f64,
    pub var_z: f64,
    pub var_x: f64,
    /// Correlation time for time-resolved simulation; `None` is static noise.
    pub correlation_time: Option<f64>,
    /// Linear cusp of the longitudinal autocorrelation.
    pub g1: f64,
}

impl NoiseModel {
    pub fn dephasing(eta_mean: f64, var_z: f64) -> Self {
        Self { eta_mean, var_z, var_x: 0.0, correlation_time: None, g1: 0.0 }
    }

    pub fn general(eta_mean: f64, var_x: f64, var_z: f64) -> Self {
        Self { eta_mean, var_z, var_x, correlation_time: None, g1: 0.0 }
    }

    pub fn unit_dephasing() -> Self {
        Self::dephasing(1.0, 1.0)
    }

    pub fn unit_general() -> Self {
        Self::general(1.0, 1.0, 1.0)
    }

    pub fn with_correlation_time(self, tau_c: f64) -> Self {
        Self { correlation_time: Some(tau_c), ..self }
    }

    pub fn is_general(&self) -> bool {
        self.var_x > 0.0
    }

    /// `eta_mean^2 + var_z`.
    pub fn longitudinal_moment(&self) -> f64 {
        self.eta_mean * self.eta_mean + self.var_z
    }

    pub fn validate(&self) -> Result<()> {
        if self.var_x < 0.0 || self.var_z < 0.0 || !self.eta_mean.is_finite() {
            return Err(Error::InvalidParameter("noise variances must be non-negative".into()));
        }
        if let Some(tc) = self.correlation_time {
            if !(tc > 0.0) {
                return Err(Error::InvalidParameter("correlation time must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A residual normalized to unit noise moment; `weight` is the moment it
/// multiplies in the Magnus term.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualVector {
    pub entries: Vec<Residual>,
}

impl ResidualVector {
    fn push(&mut self, name: &str, value: f64, weight: f64) {
        self.entries.push(Residual { name: name.to_string(), value, weight });
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.value).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// `sum |r_i|`.
    pub fn residue(&self) -> f64 {
        self.entries.iter().map(|r| r.value.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, r| m.max(r.value.abs()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Which residuals to form. `Symmetric` drops the ones that vanish
/// identically for time-symmetric controls `v(1 - t) = v(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Full,
    Symmetric,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConditionPolicy {
    pub propagation: PropagationPolicy,
    pub quadrature: QuadraturePolicy<f64>,
}

/// Integrals of a trajectory needed by every residual.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryMoments {
    /// `int D`.
    pub first: Mat3<f64>,
    /// `K[g][i]`, ordered double integral of column `i` crossed with itself.
    pub second: Option<Mat3<f64>>,
    pub end: Su2<f64>,
}

impl TrajectoryMoments {
    pub fn compute(traj: &RotationTrajectory, order: u8, policy: &QuadraturePolicy<f64>) -> Result<Self> {
        let (first, second) = if order >= 2 {
            let (c, k) = integrals::first_and_second(traj, policy)?;
            (c, Some(k))
        } else {
            (integrals::first(traj, policy)?, None)
        };
        Ok(Self { first, second, end: traj.final_su2() })
    }

    fn second(&self) -> Result<&Mat3<f64>> {
        self.second.as_ref().ok_or_else(|| Error::InvalidParameter("second-order integrals were not computed".into()))
    }

    fn longitudinal(&self) -> Result<Vec3<f64>> {
        Ok(column(self.second()?, 2))
    }

    fn transverse(&self) -> Result<Vec3<f64>> {
        let k = self.second()?;
        Ok(add(&column(k, 0), &column(k, 1)))
    }
}

/// `(int D_xz, int D_yz, int D_zz)`.
pub fn residual_fm_first(m: &TrajectoryMoments) -> [f64; 3] {
    column(&m.first, 2)
}

/// Ordered double integrals of the z column, from the cross-product form.
pub fn residual_fm_second_dephasing(m: &TrajectoryMoments) -> Result<[f64; 3]> {
    m.longitudinal()
}

/// Transverse `mu2_1..3` followed by longitudinal `mu2_4..6`.
pub fn residual_general_second(m: &TrajectoryMoments) -> Result<[f64; 6]> {
    let t = m.transverse()?;
    let l = m.longitudinal()?;
    Ok([t[0], t[1], t[2], l[0], l[1], l[2]])
}

/// `psi(end) - theta` and `theta_axis(end) - pi/2` from the final rotation.
pub fn boundary_residuals(end: &Su2<f64>, theta: f64) -> [f64; 2] {
    let n = norm(&end.q);
    let psi = 2.0 * n.atan2(end.w);
    let az = if n > 0.0 { end.q[2] / n } else { 1.0 };
    [psi - theta, -az.clamp(-1.0, 1.0).asin()]
}

/// Frame adapted to a symmetric pulse: `u` is the axis of the mirror rotation
/// and `e1`, `e2` span its orthogonal complement.
fn symmetric_frame(end: &Su2<f64>) -> (Vec3<f64>, Vec3<f64>, Vec3<f64>) {
    let [x, y, _] = end.q;
    let u0 = [-y, x, end.w];
    let u = scale(&u0, 1.0 / norm(&u0));
    let h = (x * x + y * y).sqrt();
    let e1 = if h > 0.0 { [x / h, y / h, 0.0] } else { [1.0, 0.0, 0.0] };
    let e2 = cross(&u, &e1);
    (u, e1, e2)
}

/// Residuals of an FM or composite trajectory for a given order and noise.
pub fn fm_residuals(m: &TrajectoryMoments, theta: f64, order: u8, noise: &NoiseModel, reduction: Reduction) -> Result<ResidualVector> {
    let mut out = ResidualVector::default();
    let eta = noise.eta_mean;
    let lw = noise.longitudinal_moment();
    let [dpsi, daxis] = boundary_residuals(&m.end, theta);
    let mu1 = residual_fm_first(m);
    match reduction {
        Reduction::Full => {
            for (i, v) in mu1.iter().enumerate() {
                out.push(&format!("mu1_{}", i + 1), *v, eta);
            }
            out.push("angle", dpsi, 1.0);
            out.push("axis_theta", daxis, 1.0);
            if order >= 2 {
                if noise.is_general() {
                    let t = m.transverse()?;
                    for (i, v) in t.iter().enumerate() {
                        out.push(&format!("mu2_{}", i + 1), *v, noise.var_x);
                    }
                }
                for (i, v) in m.longitudinal()?.iter().enumerate() {
                    out.push(&format!("mu2_{}", i + 4), *v, lw);
                }
            }
        }
        Reduction::Symmetric => {
            let (u, e1, e2) = symmetric_frame(&m.end);
            out.push("angle", dpsi, 1.0);
            out.push("mu1_sym", dot(&u, &mu1), eta);
            if order >= 2 {
                if noise.is_general() {
                    let t = m.transverse()?;
                    out.push("mu2t_sym_1", dot(&e1, &t), noise.var_x);
                    out.push("mu2t_sym_2", dot(&e2, &t), noise.var_x);
                }
                let l = m.longitudinal()?;
                out.push("mu2_sym_1", dot(&e1, &l), lw);
                out.push("mu2_sym_2", dot(&e2, &l), lw);
            }
        }
    }
    Ok(out)
}

/// AM residuals under pure dephasing: `int sin psi`, `int cos psi`, the angle,
/// and for order 2 `int_{t2<t1} sin(psi1 - psi2)`.
pub fn residual_am_dephasing(spec: &PulseSpec, order: u8, noise: &NoiseModel, reduction: Reduction, policy: &ConditionPolicy) -> Result<ResidualVector> {
    let (s, c, mu2, psi_end) = match spec {
        PulseSpec::PiecewiseAm(p) => {
            p.validate()?;
            let (s, c, mu2) = piecewise_integrals(p);
            (s, c, mu2, p.psi(1.0))
        }
        PulseSpec::ContinuousAm(p) => {
            let traj = propagate(spec, &policy.propagation)?;
            let m = TrajectoryMoments::compute(&traj, order, &policy.quadrature)?;
            let mu2 = if order >= 2 { m.second()?[1][2] } else { 0.0 };
            (-m.first[0][2], m.first[2][2], mu2, p.psi(1.0))
        }
        _ => return Err(Error::InvalidParameter("AM residuals need an amplitude-modulated pulse".into())),
    };
    let theta = spec.theta();
    let continuous = matches!(spec, PulseSpec::ContinuousAm(_));
    let mut out = ResidualVector::default();
    match reduction {
        Reduction::Full => {
            out.push("mu1_1", s, noise.eta_mean);
            out.push("mu1_2", c, noise.eta_mean);
            out.push("angle", psi_end - theta, 1.0);
        }
        Reduction::Symmetric => {
            if !continuous {
                out.push("angle", psi_end - theta, 1.0);
            }
            let (sh, ch) = (psi_end / 2.0).sin_cos();
            out.push("mu1_sym", s * sh + c * ch, noise.eta_mean);
        }
    }
    if order >= 2 {
        out.push("mu2", mu2, noise.longitudinal_moment());
    }
    Ok(out)
}

/// Residuals of any pulse for the given order and noise model.
pub fn evaluate_conditions(spec: &PulseSpec, order: u8, noise: &NoiseModel, reduction: Reduction, policy: &ConditionPolicy) -> Result<ResidualVector> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!("order must be 1 or 2, got {order}")));
    }
    noise.validate()?;
    if spec.is_amplitude_modulated() {
        if noise.is_general() {
            return Err(Error::InvalidParameter(
                "amplitude-modulated pulses are only defined for pure dephasing".into(),
            ));
        }
        return residual_am_dephasing(spec, order, noise, reduction, policy);
    }
    let traj = propagate(spec, &policy.propagation)?;
    let m = TrajectoryMoments::compute(&traj, order, &policy.quadrature)?;
    let mut r = fm_residuals(&m, spec.theta(), order, noise, reduction)?;
    if matches!(spec, PulseSpec::Composite(_)) {
        // A net 2 pi rotation has no axis.
        r.entries.retain(|e| e.name != "axis_theta");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{ContinuousAm, FmPulse, PiecewiseAm};
    use core::f64::consts::PI;

    #[test]
    fn constant_phase_first_order_matches_closed_form() {
        let v0 = 2.7;
        let spec = PulseSpec::Fm(FmPulse { theta: PI, amplitude: v0, coefficients: vec![], switching_time: None });
        let r = evaluate_conditions(&spec, 1, &NoiseModel::unit_dephasing(), Reduction::Full, &Default::default()).unwrap();
        assert!((r.get("mu1_3").unwrap() - (2.0 * v0).sin() / (2.0 * v0)).abs() < 1e-12);
        assert!((r.get("angle").unwrap() - (2.0 * v0 - PI)).abs() < 1e-12);
    }

    #[test]
    fn continuous_am_quadrature_matches_piecewise_closed_form_limit() {
        let spec = PulseSpec::ContinuousAm(ContinuousAm { theta: PI, a: -1.92179255, b: 2.86838351 });
        let r = evaluate_conditions(&spec, 2, &NoiseModel::unit_dephasing(), Reduction::Full, &Default::default()).unwrap();
        assert!(r.max_abs() < 5e-6, "{r:?}");
    }

    #[test]
    fn piecewise_closed_form_matches_quadrature() {
        let p = PiecewiseAm::symmetric(PI / 2.0, 0.03312609, 0.25209296, 6.32709469);
        let (s, c, mu2) = piecewise_integrals(&p);
        let spec = PulseSpec::PiecewiseAm(p);
        let traj = propagate(&spec, &PropagationPolicy::default()).unwrap();
        let m = TrajectoryMoments::compute(&traj, 2, &QuadraturePolicy::default()).unwrap();
        assert!((s + m.first[0][2]).abs() < 1e-12);
        assert!((c - m.first[2][2]).abs() < 1e-12);
        assert!((mu2 - m.second.unwrap()[1][2]).abs() < 1e-12);
    }

    #[test]
    fn am_under_general_noise_is_rejected() {
        let spec = PulseSpec::PiecewiseAm(PiecewiseAm::unshaped(PI));
        let r = evaluate_conditions(&spec, 1, &NoiseModel::unit_general(), Reduction::Full, &Default::default());
        assert!(r.is_err());
    }
}
