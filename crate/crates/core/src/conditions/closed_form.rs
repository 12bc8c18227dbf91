//! Closed-form integrals for piecewise-constant AM pulses, where the angle is
//! linear on every segment.

use num_complex::Complex64;

use crate::pulse::PiecewiseAm;

/// `(e^{ix} - 1) / (ix)`.
fn phi1(x: f64) -> Complex64 {
    if x.abs() < 0.1 {
        series(x, 1)
    } else {
        (Complex64::new(0.0, x).exp() - 1.0) / Complex64::new(0.0, x)
    }
}

/// `(e^{ix} - 1 - ix) / (ix)^2`.
fn phi2(x: f64) -> Complex64 {
    if x.abs() < 0.1 {
        series(x, 2)
    } else {
        let ix = Complex64::new(0.0, x);
        (ix.exp() - 1.0 - ix) / (ix * ix)
    }
}

/// `sum_n (ix)^n / (n + shift)!`.
fn series(x: f64, shift: u32) -> Complex64 {
    let ix = Complex64::new(0.0, x);
    let mut term = Complex64::new(1.0 / (1..=shift).product::<u32>() as f64, 0.0);
    let mut sum = term;
    for n in 1..14 {
        term = term * ix / (n + shift) as f64;
        sum += term;
    }
    sum
}

/// `(int sin psi, int cos psi, int_{t2<t1} sin(psi1 - psi2))`.
pub fn piecewise_integrals(p: &PiecewiseAm) -> (f64, f64, f64) {
    let mut psi = 0.0;
    let mut first = Complex64::new(0.0, 0.0);
    let mut e = Complex64::new(0.0, 0.0);
    let mut j = Complex64::new(0.0, 0.0);
    for (a, b, omega) in p.segments() {
        let l = b - a;
        let x = omega * l;
        let rot = Complex64::from_polar(1.0, psi);
        let seg = rot * phi1(x) * l;
        j += e * seg + l * l * phi2(x);
        first += seg;
        e += rot.conj() * phi1(x).conj() * l;
        psi += x;
    }
    (first.im, first.re, j.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn unshaped_pi_pulse() {
        let (s, c, mu2) = piecewise_integrals(&PiecewiseAm::unshaped(PI));
        assert!((s - 2.0 / PI).abs() < 1e-15);
        assert!(c.abs() < 1e-15);
        assert!((mu2 - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn series_branch_is_continuous() {
        for x in [0.0999999, 0.1000001] {
            let ix = Complex64::new(0.0, x);
            let exact = (ix.exp() - 1.0 - ix) / (ix * ix);
            assert!((phi2(x) - exact).norm() < 1e-12);
            assert!((phi1(x) - (ix.exp() - 1.0) / ix).norm() < 1e-14);
        }
        assert_eq!(phi2(0.0), Complex64::new(0.5, 0.0));
    }
}
