//! One-dimensional amplitude minimization along a solution family.

use rayon::prelude::*;

use crate::scalar::Real;

/// A square system with one extra parameter. `solve` returns the solved
/// parameter vector and its amplitude for a given spare value.
pub trait SpareFamily<T>: Sync {
    fn solve(&self, spare: T, warm: &[T]) -> Option<(Vec<T>, T)>;
}

#[derive(Debug, Clone)]
pub struct SpareStart<T> {
    pub lo: T,
    pub hi: T,
    pub guess: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct SpareSearch<T> {
    pub scan_points: usize,
    /// Golden-section stops once the bracket is narrower than this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SpareSearch<T> {
    fn default() -> Self {
        Self { scan_points: 9, tol: T::lit(1e-5), max_iter: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct AmplitudeMinimum<T> {
    pub start: usize,
    pub spare: T,
    pub amplitude: T,
    pub x: Vec<T>,
    pub solves: usize,
}

fn better<T: Real>(a: &(T, T, Vec<T>), b: &(T, T, Vec<T>)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0.abs() < b.0.abs())
}

/// Coarse scan then golden-section refinement over `[start.lo, start.hi]`.
pub fn minimize_over_spare<T: Real, F: SpareFamily<T>>(
    family: &F,
    start: &SpareStart<T>,
    search: &SpareSearch<T>,
) -> Option<(T, T, Vec<T>, usize)> {
    let mut solves = 0usize;
    let mut warm = start.guess.clone();
    let mut eval = |s: T, warm: &mut Vec<T>| -> Option<(T, T, Vec<T>)> {
        solves += 1;
        let r = family.solve(s, warm).or_else(|| {
            solves += 1;
            family.solve(s, &start.guess)
        });
        r.map(|(x, amp)| {
            *warm = x.clone();
            (s, amp, x)
        })
    };
    let m = search.scan_points.max(3);
    let step = (start.hi - start.lo) / T::from_usize(m - 1).unwrap();
    let scan: Vec<Option<(T, T, Vec<T>)>> = (0..m)
        .map(|i| eval(start.lo + step * T::from_usize(i).unwrap(), &mut warm))
        .collect();
    let (ibest, mut best) = scan
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.clone().map(|r| (i, r)))
        .reduce(|a, b| if better(&b.1, &a.1) { b } else { a })?;
    warm = best.2.clone();
    let mut a = start.lo + step * T::from_usize(ibest.saturating_sub(1)).unwrap();
    let mut b = start.lo + step * T::from_usize((ibest + 1).min(m - 1)).unwrap();
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval(c, &mut warm);
    let mut fd = eval(d, &mut warm);
    let val = |r: &Option<(T, T, Vec<T>)>| r.as_ref().map(|r| r.1).unwrap_or(T::infinity());
    for _ in 0..search.max_iter {
        if (b - a).abs() < search.tol {
            break;
        }
        if val(&fc) <= val(&fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c, &mut warm);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d, &mut warm);
        }
    }
    for r in [fc, fd].into_iter().flatten() {
        if better(&r, &best) {
            best = r;
        }
    }
    Some((best.0, best.1, best.2, solves))
}

/// Runs every start in parallel and keeps the smallest amplitude. Ties go to
/// the smaller spare magnitude, then the lower start index.
pub fn minimize_amplitude<T: Real, F: SpareFamily<T>>(
    family: &F,
    starts: &[SpareStart<T>],
    search: &SpareSearch<T>,
) -> Option<AmplitudeMinimum<T>> {
    let results: Vec<Option<AmplitudeMinimum<T>>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            minimize_over_spare(family, s, search).map(|(spare, amplitude, x, solves)| AmplitudeMinimum {
                start: i,
                spare,
                amplitude,
                x,
                solves,
            })
        })
        .collect();
    results.into_iter().flatten().reduce(|a, b| {
        if b.amplitude < a.amplitude || (b.amplitude == a.amplitude && b.spare.abs() < a.spare.abs()) {
            b
        } else {
            a
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Parabola;

    impl SpareFamily<f64> for Parabola {
        fn solve(&self, s: f64, _warm: &[f64]) -> Option<(Vec<f64>, f64)> {
            if s > 2.5 {
                return None;
            }
            Some((vec![s], 3.0 + (s - 0.4).powi(2)))
        }
    }

    #[test]
    fn finds_interior_minimum_despite_failures() {
        let start = SpareStart { lo: -2.0, hi: 3.0, guess: vec![0.0] };
        let m = minimize_amplitude(&Parabola, &[start.clone(), start], &SpareSearch::default()).unwrap();
        assert!((m.spare - 0.4).abs() < 1e-4);
        assert!((m.amplitude - 3.0).abs() < 1e-8);
        assert_eq!(m.start, 0);
    }
}
