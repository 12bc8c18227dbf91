use crate::conditions::{integrals, NoiseModel};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{gk61, integrate_adaptive_vec, QuadraturePolicy};
use crate::trajectory::RotationTrajectory;
use crate::vec3::{add, column, cross, scale, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnusOrder {
    First,
    Second,
    /// Diagnostic only; third moments use the Gaussian factorization.
    Third,
}

impl TryFrom<u8> for MagnusOrder {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            _ => Err(Error::InvalidParameter(format!("Magnus order must be 1, 2 or 3, got {v}"))),
        }
    }
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
/// `t D_z(t)`, used by the cusp terms.
const TZ: usize = 3;

type Ch = [[f64; 3]; 4];

/// Columns of `D` plus the time-weighted z column, with nested running integrals.
struct Channels<'a> {
    traj: &'a RotationTrajectory,
    panels: Vec<f64>,
    l1: Vec<[f64; 12]>,
    l2: Vec<[f64; 144]>,
}

fn pack(c: &Ch) -> [f64; 12] {
    let mut o = [0.0; 12];
    for k in 0..4 {
        o[3 * k..3 * k + 3].copy_from_slice(&c[k]);
    }
    o
}

fn unpack(v: &[f64; 12]) -> Ch {
    let mut c = [[0.0; 3]; 4];
    for k in 0..4 {
        c[k].copy_from_slice(&v[3 * k..3 * k + 3]);
    }
    c
}

impl<'a> Channels<'a> {
    fn new(traj: &'a RotationTrajectory, nested: bool) -> Self {
        let panels = traj.panels().to_vec();
        let mut me = Self { traj, panels, l1: vec![[0.0; 12]], l2: vec![[0.0; 144]] };
        for k in 0..me.panels.len() - 1 {
            let (a, b) = (me.panels[k], me.panels[k + 1]);
            let (v, _) = gk61(&mut |t| pack(&me.ch(t)), a, b);
            let mut next = me.l1[k];
            next.iter_mut().zip(v).for_each(|(x, y)| *x += y);
            me.l1.push(next);
        }
        if nested {
            for k in 0..me.panels.len() - 1 {
                let (a, b) = (me.panels[k], me.panels[k + 1]);
                let (v, _) = gk61(&mut |t| me.outer_product(t), a, b);
                let mut next = me.l2[k];
                next.iter_mut().zip(v).for_each(|(x, y)| *x += y);
                me.l2.push(next);
            }
        }
        me
    }

    fn ch(&self, t: f64) -> Ch {
        let d = self.traj.toggling_matrix(t);
        let z = column(&d, 2);
        [column(&d, 0), column(&d, 1), z, scale(&z, t)]
    }

    fn panel(&self, t: f64) -> usize {
        self.panels.partition_point(|p| *p <= t).clamp(1, self.panels.len() - 1) - 1
    }

    fn running(&self, t: f64) -> Ch {
        let k = self.panel(t);
        let mut v = self.l1[k];
        if t > self.panels[k] {
            let (p, _) = gk61(&mut |s| pack(&self.ch(s)), self.panels[k], t);
            v.iter_mut().zip(p).for_each(|(x, y)| *x += y);
        }
        unpack(&v)
    }

    /// `b(s) (x) C_c(s)` for all channel pairs, flattened as `[b][c][p][q]`.
    fn outer_product(&self, s: f64) -> [f64; 144] {
        let ch = self.ch(s);
        let cum = self.running(s);
        let mut o = [0.0; 144];
        for b in 0..4 {
            for c in 0..4 {
                for p in 0..3 {
                    for q in 0..3 {
                        o[36 * b + 9 * c + 3 * p + q] = ch[b][p] * cum[c][q];
                    }
                }
            }
        }
        o
    }

    fn nested(&self, t: f64) -> [f64; 144] {
        let k = self.panel(t);
        let mut v = self.l2[k];
        if t > self.panels[k] {
            let (p, _) = gk61(&mut |s| self.outer_product(s), self.panels[k], t);
            v.iter_mut().zip(p).for_each(|(x, y)| *x += y);
        }
        v
    }
}

/// Pauli coefficients of the averaged Magnus term of the given order, in
/// units where the pulse duration is 1.
pub fn magnus_term(order: u8, traj: &RotationTrajectory, noise: &NoiseModel, policy: &QuadraturePolicy<f64>) -> Result<Vec3<f64>> {
    noise.validate()?;
    match MagnusOrder::try_from(order)? {
        MagnusOrder::First => {
            let c = integrals::first(traj, policy)?;
            Ok(scale(&column(&c, 2), noise.eta_mean))
        }
        MagnusOrder::Second => {
            let (_, k) = integrals::first_and_second(traj, policy)?;
            let mut out = scale(&column(&k, 2), noise.longitudinal_moment());
            out = add(&out, &scale(&add(&column(&k, 0), &column(&k, 1)), noise.var_x));
            if noise.g1 != 0.0 {
                let ch = Channels::new(traj, false);
                let est = integrate_adaptive_vec(
                    |t| {
                        let a = ch.ch(t);
                        let c = ch.running(t);
                        let u = cross(&a[TZ], &c[Z]);
                        let w = cross(&a[Z], &c[TZ]);
                        [u[0] - w[0], u[1] - w[1], u[2] - w[2]]
                    },
                    traj.panels(),
                    policy,
                )?;
                out = add(&out, &scale(&est.value, noise.g1));
            }
            Ok(out)
        }
        MagnusOrder::Third => third_order(traj, noise, policy),
    }
}

fn third_order(traj: &RotationTrajectory, noise: &NoiseModel, policy: &QuadraturePolicy<f64>) -> Result<Vec3<f64>> {
    let m = noise.eta_mean;
    let (cx, cz, g) = (noise.var_x, noise.var_z, noise.g1);
    let mut terms: Vec<(f64, usize, usize, usize)> = vec![
        (m * m * m + 3.0 * m * cz, Z, Z, Z),
        (m * cx, Z, X, X),
        (m * cx, Z, Y, Y),
        (m * cx, X, Z, X),
        (m * cx, Y, Z, Y),
        (m * cx, X, X, Z),
        (m * cx, Y, Y, Z),
    ];
    if g != 0.0 {
        terms.extend([
            (m * g, Z, TZ, Z),
            (-m * g, Z, Z, TZ),
            (m * g, TZ, Z, Z),
            (-m * g, Z, Z, TZ),
            (m * g, TZ, Z, Z),
            (-m * g, Z, TZ, Z),
        ]);
    }
    terms.retain(|t| t.0 != 0.0);
    if terms.is_empty() {
        return Ok([0.0; 3]);
    }
    let ch = Channels::new(traj, true);
    let loose = QuadraturePolicy { abs_tol: policy.abs_tol.max(1e-10), ..*policy };
    let est = integrate_adaptive_vec(
        |t| {
            let a = ch.ch(t);
            let mm = ch.nested(t);
            let mut out = [0.0; 3];
            for &(w, ia, ib, ic) in &terms {
                let base = 36 * ib + 9 * ic;
                let mat = |p: usize, q: usize| mm[base + 3 * p + q];
                let av = a[ia];
                let tr = mat(0, 0) + mat(1, 1) + mat(2, 2);
                for p in 0..3 {
                    let mut v = -tr * av[p];
                    for q in 0..3 {
                        v += 2.0 * mat(p, q) * av[q] - mat(q, p) * av[q];
                    }
                    out[p] += w * v;
                }
            }
            out
        },
        traj.panels(),
        &loose,
    );
    Ok(scale(&est?.value, 2.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{PiecewiseAm, PulseSpec};
    use crate::trajectory::{propagate, PropagationPolicy};
    use core::f64::consts::PI;

    fn unshaped() -> RotationTrajectory {
        propagate(&PulseSpec::PiecewiseAm(PiecewiseAm::unshaped(PI)), &PropagationPolicy::default()).unwrap()
    }

    #[test]
    fn unshaped_pi_pulse_first_and_second_order() {
        let traj = unshaped();
        let p = QuadraturePolicy::default();
        let h1 = magnus_term(1, &traj, &NoiseModel::dephasing(1.0, 0.0), &p).unwrap();
        assert!((h1[0] + 2.0 / PI).abs() < 1e-12);
        assert!(h1[2].abs() < 1e-12);
        let h2 = magnus_term(2, &traj, &NoiseModel::dephasing(1.0, 0.0), &p).unwrap();
        assert!((h2[1] - 1.0 / PI).abs() < 1e-12);
        assert!(h2[0].abs() < 1e-12 && h2[2].abs() < 1e-12);
    }

    #[test]
    fn moments_enter_linearly() {
        let traj = unshaped();
        let p = QuadraturePolicy::default();
        let a = magnus_term(2, &traj, &NoiseModel::dephasing(1.0, 0.5), &p).unwrap();
        let b = magnus_term(2, &traj, &NoiseModel::dephasing(2f64.sqrt(), 1.0), &p).unwrap();
        assert!((0..3).all(|i| (2.0 * a[i] - b[i]).abs() < 1e-14));
    }

    #[test]
    fn order_out_of_range() {
        let traj = unshaped();
        assert!(magnus_term(4, &traj, &NoiseModel::unit_dephasing(), &QuadraturePolicy::default()).is_err());
    }
}
