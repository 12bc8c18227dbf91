//! Delimited waveform and trajectory dumps in physical units.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pulse::{eval_control, ControlField, PulseSpec};
use crate::trajectory::{dump_row, propagate, PropagationPolicy};

fn grid(duration: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    Ok((0..samples).map(|i| duration * i as f64 / (samples - 1) as f64).collect())
}

/// Columns `t, v_x, v_y, v_z, omega, f`. Time is scaled by `tau_p` and the
/// control by `1 / tau_p`.
pub fn waveform_csv(spec: &PulseSpec, tau_p: f64, samples: usize) -> Result<String> {
    spec.validate()?;
    let mut out = String::from("t,v_x,v_y,v_z,omega,f\n");
    for u in grid(spec.duration(), samples)? {
        let c = eval_control(spec, u);
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?}",
            u * tau_p,
            c.v[0] / tau_p,
            c.v[1] / tau_p,
            c.v[2] / tau_p,
            c.omega,
            c.envelope
        );
    }
    Ok(out)
}

/// Columns `t, psi, phi, theta, a_x, a_y, a_z` of the global rotation.
pub fn trajectory_csv(spec: &PulseSpec, tau_p: f64, samples: usize, policy: &PropagationPolicy) -> Result<String> {
    let traj = propagate(spec, policy)?;
    let mut out = String::from("t,psi,phi,theta,a_x,a_y,a_z\n");
    for u in grid(traj.duration(), samples)? {
        let r = dump_row(&traj, u);
        let _ = writeln!(out, "{:?},{:?},{:?},{:?},{:?},{:?},{:?}", r[0] * tau_p, r[1], r[2], r[3], r[4], r[5], r[6]);
    }
    Ok(out)
}
