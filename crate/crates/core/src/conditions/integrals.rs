//! Single and ordered double integrals of the toggling-frame matrix.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{gk61, integrate_adaptive_vec, QuadraturePolicy};
use crate::trajectory::RotationTrajectory;
use crate::vec3::{cross, Mat3};

fn flat(m: &Mat3<f64>) -> [f64; 9] {
    [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
}

fn unflat(v: &[f64; 9]) -> Mat3<f64> {
    [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
}

/// Running integral `C(t) = int_0^t D` with exact values cached at panel starts.
pub(crate) struct Cumulative<'a> {
    traj: &'a RotationTrajectory,
    panels: Vec<f64>,
    prefix: Vec<[f64; 9]>,
    policy: QuadraturePolicy<f64>,
}

impl<'a> Cumulative<'a> {
    pub fn new(traj: &'a RotationTrajectory, policy: &QuadraturePolicy<f64>) -> Result<Self> {
        let panels = traj.panels().to_vec();
        let n = panels.len() - 1;
        let inner = QuadraturePolicy { abs_tol: policy.abs_tol / (4.0 * n as f64), ..*policy };
        let mut prefix = vec![[0.0; 9]];
        for w in panels.windows(2) {
            let est = integrate_adaptive_vec(|t| flat(&traj.toggling_matrix(t)), &[w[0], w[1]], &inner)?;
            let mut next = *prefix.last().unwrap();
            for (a, b) in next.iter_mut().zip(est.value) {
                *a += b;
            }
            prefix.push(next);
        }
        Ok(Self { traj, panels, prefix, policy: inner })
    }

    pub fn total(&self) -> Mat3<f64> {
        unflat(self.prefix.last().unwrap())
    }

    pub fn at(&self, t: f64) -> Result<Mat3<f64>> {
        let k = self.panels.partition_point(|p| *p <= t).clamp(1, self.panels.len() - 1) - 1;
        let a = self.panels[k];
        let mut out = self.prefix[k];
        if t > a {
            let mut f = |s: f64| flat(&self.traj.toggling_matrix(s));
            let (v, e) = gk61(&mut f, a, t);
            let v = if e <= self.policy.abs_tol {
                v
            } else {
                integrate_adaptive_vec(f, &[a, t], &self.policy)?.value
            };
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
        Ok(unflat(&out))
    }
}

/// `int D` and `K[g][i] = int_{t2<t1} (D_i(t1) x D_i(t2))_g`, column `i` of `D`.
pub(crate) fn first_and_second(traj: &RotationTrajectory, policy: &QuadraturePolicy<f64>) -> Result<(Mat3<f64>, Mat3<f64>)> {
    let cum = Cumulative::new(traj, policy)?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let est = integrate_adaptive_vec(
        |t| {
            let d = traj.toggling_matrix(t);
            let c = match cum.at(t) {
                Ok(c) => c,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return [0.0; 9];
                }
            };
            let mut out = [0.0; 9];
            for i in 0..3 {
                let k = cross(&[d[0][i], d[1][i], d[2][i]], &[c[0][i], c[1][i], c[2][i]]);
                for g in 0..3 {
                    out[3 * g + i] = k[g];
                }
            }
            out
        },
        traj.panels(),
        policy,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((cum.total(), unflat(&est.value)))
}

/// `int D` only.
pub(crate) fn first(traj: &RotationTrajectory, policy: &QuadraturePolicy<f64>) -> Result<Mat3<f64>> {
    let est = integrate_adaptive_vec(|t| flat(&traj.toggling_matrix(t)), traj.panels(), policy)?;
    Ok(unflat(&est.value))
}
