//! Brute-force oracles written against the definitions only: complex 2x2
//! matrices, midpoint exponentials and trapezoid sums.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::TAU;

use noisepulse::pulse::{FmPulse, PulseSpec};
use num_complex::Complex64 as C;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M2 = [[C; 2]; 2];

pub fn sigma(k: usize) -> M2 {
    let (o, i, z) = (C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.0, 0.0));
    match k {
        0 => [[z, o], [o, z]],
        1 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn dagger(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn eye() -> M2 {
    let (o, z) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// `exp(-i h.sigma dt)`.
pub fn step(h: [f64; 3], dt: f64) -> M2 {
    let n = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    let (s, c) = (n * dt).sin_cos();
    let f = if n > 0.0 { s / n } else { dt };
    let mi = C::new(0.0, -f);
    [
        [C::new(c, 0.0) + mi * h[2], mi * C::new(h[0], -h[1])],
        [mi * C::new(h[0], h[1]), C::new(c, 0.0) - mi * h[2]],
    ]
}

/// `D_ij = tr(sigma_i U^dag sigma_j U) / 2`.
pub fn toggling(u: &M2) -> [[f64; 3]; 3] {
    let ud = dagger(u);
    let mut d = [[0.0; 3]; 3];
    for j in 0..3 {
        let m = mul(&ud, &mul(&sigma(j), u));
        for (i, row) in d.iter_mut().enumerate() {
            let p = mul(&sigma(i), &m);
            row[j] = 0.5 * (p[0][0] + p[1][1]).re;
        }
    }
    d
}

/// `(w, q)` with `U = w - i q.sigma`.
pub fn quaternion(u: &M2) -> (f64, [f64; 3]) {
    (u[0][0].re, [-u[0][1].im, -u[0][1].re, -u[0][0].im])
}

/// FM control with a rectangular envelope, straight from its Fourier definition.
pub fn fm_control(v0: f64, coefficients: &[(usize, f64)], t: f64) -> [f64; 3] {
    let omega: f64 = coefficients
        .iter()
        .map(|&(k, b)| {
            let n = k.div_ceil(2) as f64;
            if k % 2 == 1 {
                b * (TAU * n * t).sin()
            } else {
                b * ((TAU * n * t).cos() - 1.0)
            }
        })
        .sum();
    [v0 * omega.cos(), v0 * omega.sin(), 0.0]
}

pub struct Brute {
    /// `int_0^1 D`.
    pub first: [[f64; 3]; 3],
    /// `k[g][i] = int_{t2<t1} (D_i(t1) x D_i(t2))_g`.
    pub second: [[f64; 3]; 3],
    pub end: M2,
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn col(d: &[[f64; 3]; 3], i: usize) -> [f64; 3] {
    [d[0][i], d[1][i], d[2][i]]
}

/// Trapezoid integrals over `slices` uniform slices of `[0, 1]`.
pub fn trapezoid(control: impl Fn(f64) -> [f64; 3], slices: usize) -> Brute {
    let dt = 1.0 / slices as f64;
    let mut u = eye();
    let mut d_prev = toggling(&u);
    let mut first = [[0.0; 3]; 3];
    let mut second = [[0.0; 3]; 3];
    let mut cum_prev = [[0.0; 3]; 3];
    for k in 0..slices {
        let tm = (k as f64 + 0.5) * dt;
        u = mul(&step(control(tm), dt), &u);
        let d = toggling(&u);
        let mut cum = cum_prev;
        for i in 0..3 {
            for g in 0..3 {
                cum[g][i] += 0.5 * dt * (d_prev[g][i] + d[g][i]);
                first[g][i] = cum[g][i];
            }
        }
        for i in 0..3 {
            let a = cross(&col(&d_prev, i), &col(&cum_prev, i));
            let b = cross(&col(&d, i), &col(&cum, i));
            for g in 0..3 {
                second[g][i] += 0.5 * dt * (a[g] + b[g]);
            }
        }
        d_prev = d;
        cum_prev = cum;
    }
    Brute { first, second, end: u }
}

/// Random rectangular FM pulse with moderate amplitude and six coefficients.
pub fn random_fm(seed: u64) -> FmPulse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients = (1..=6).map(|k| (k, rng.random_range(-1.0..1.0))).collect();
    FmPulse { theta: std::f64::consts::PI, amplitude: rng.random_range(2.0..7.0), coefficients, switching_time: None }
}

pub fn fm_spec(p: &FmPulse) -> PulseSpec {
    PulseSpec::Fm(p.clone())
}
