//! Classical Runge-Kutta with step doubling, landing exactly on requested stops.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    /// Bound on the Richardson estimate of the local absolute error.
    pub local_tol: T,
    pub initial_step: T,
    pub min_step: T,
    pub max_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            local_tol: T::lit(1e-15),
            initial_step: T::lit(1e-3),
            min_step: T::lit(1e-12),
            max_step: T::lit(0.05),
            max_steps: 100_000,
        }
    }
}

/// Accepted solution point with its derivative.
#[derive(Debug, Clone, Copy)]
pub struct Node<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub dy: [T; N],
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, k: &[T; N]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

fn rk4_step<T: Real, const N: usize, F: FnMut(T, &[T; N]) -> [T; N]>(
    f: &mut F,
    t: T,
    y: &[T; N],
    k1: &[T; N],
    h: T,
) -> [T; N] {
    let half = h / T::lit(2.0);
    let k2 = f(t + half, &axpy(y, half, k1));
    let k3 = f(t + half, &axpy(y, half, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    let sixth = h / T::lit(6.0);
    for i in 0..N {
        out[i] += sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

/// Integrates `y' = f(t, y)` from `stops[0]` through every later stop.
/// `project` is applied to each accepted state (e.g. renormalization).
/// Returns all accepted nodes. Each stop carries a node with the left-sided
/// derivative, followed by a right-sided one when the two differ.
pub fn integrate_rk4<T, const N: usize, F, P>(
    mut f: F,
    y0: [T; N],
    stops: &[T],
    ctl: &StepControl<T>,
    mut project: P,
) -> Result<Vec<Node<T, N>>>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    P: FnMut(&mut [T; N]),
{
    if stops.len() < 2 || stops.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("integration stops must be sorted, at least two".into()));
    }
    let mut t = stops[0];
    let mut y = y0;
    project(&mut y);
    let mut dy = f(t, &y);
    let mut nodes = vec![Node { t, y, dy }];
    let mut h = ctl.initial_step.min(ctl.max_step);
    let mut steps = 0usize;
    let two = T::lit(2.0);
    for &stop in &stops[1..] {
        while t < stop {
            let remaining = stop - t;
            let last = h >= remaining * (T::one() - T::lit(1e-12));
            let step = if last { remaining } else { h };
            // Stages never reach `stop`, so a jump there is seen from the left.
            let limit = stop - (stop.abs() + T::one()) * T::epsilon();
            let mut g = |s: T, y: &[T; N]| f(s.min(limit), y);
            let big = rk4_step(&mut g, t, &y, &dy, step);
            let mid = rk4_step(&mut g, t, &y, &dy, step / two);
            let dmid = g(t + step / two, &mid);
            let small = rk4_step(&mut g, t + step / two, &mid, &dmid, step / two);
            let mut err = T::zero();
            for i in 0..N {
                err = err.max((small[i] - big[i]).abs());
            }
            err /= T::lit(15.0);
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * (ctl.local_tol / err).powf(T::lit(0.2))).max(T::lit(0.2)).min(T::lit(5.0))
            };
            if err <= ctl.local_tol {
                t = if last { stop } else { t + step };
                y = small;
                project(&mut y);
                if last {
                    let left = f(limit, &y);
                    nodes.push(Node { t, y, dy: left });
                    dy = f(t, &y);
                    if dy != left {
                        nodes.push(Node { t, y, dy });
                    }
                } else {
                    dy = f(t, &y);
                    nodes.push(Node { t, y, dy });
                }
                steps += 1;
                if steps > ctl.max_steps {
                    return Err(Error::StepSizeUnderflow { t: t.as_f64() });
                }
                if !last || factor < T::one() {
                    h = (step * factor).min(ctl.max_step);
                }
            } else {
                h = step * factor;
                if h < ctl.min_step {
                    return Err(Error::StepSizeUnderflow { t: t.as_f64() });
                }
            }
        }
    }
    Ok(nodes)
}

/// Cubic Hermite interpolation between two nodes.
pub fn hermite<T: Real, const N: usize>(a: &Node<T, N>, b: &Node<T, N>, t: T) -> [T; N] {
    let h = b.t - a.t;
    if h == T::zero() {
        return a.y;
    }
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    let mut out = [T::zero(); N];
    for i in 0..N {
        out[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
    }
    out
}
