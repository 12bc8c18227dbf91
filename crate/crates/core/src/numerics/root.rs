//! Powell hybrid dogleg root finder with forward-difference Jacobians and
//! Broyden rank-one updates between refreshes.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig<T> {
    /// Success threshold on the residue `sum |f_i|`.
    pub acceptance: T,
    pub max_evaluations: usize,
    /// Relative forward-difference step.
    pub fd_step: T,
    /// Trust-region floor relative to the scaled parameter norm.
    pub xtol: T,
    /// Initial trust-region factor.
    pub factor: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            acceptance: T::lit(1e-10),
            max_evaluations: 400,
            fd_step: T::lit(1e-7),
            xtol: T::lit(1e-15),
            factor: T::lit(100.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RootStatus {
    Converged,
    MaxEvaluations,
    NoProgress,
    StepTooSmall,
    EvaluationFailed(String),
}

#[derive(Debug, Clone)]
pub struct RootSolution<T> {
    pub x: Vec<T>,
    pub f: Vec<T>,
    pub residue: T,
    pub evaluations: usize,
    pub jacobians: usize,
    pub status: RootStatus,
}

impl<T: Real> RootSolution<T> {
    pub fn converged(&self) -> bool {
        self.status == RootStatus::Converged
    }

    pub fn into_result(self) -> Result<Self> {
        if self.converged() {
            Ok(self)
        } else {
            Err(Error::RootNotFound {
                residue: self.residue.as_f64(),
                evaluations: self.evaluations,
                reason: format!("{:?}", self.status),
            })
        }
    }
}

fn enorm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt()
}

fn residue<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + x.abs())
}

/// Householder QR of a square matrix given by columns. Returns `(q, r)` with
/// `q` stored by columns and `r` by rows.
fn qr<T: Real>(cols: &[Vec<T>]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let n = cols.len();
    let mut a: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let mut q: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    for k in 0..n {
        let alpha = (k..n).fold(T::zero(), |s, i| s + a[i][k] * a[i][k]).sqrt();
        if alpha == T::zero() {
            continue;
        }
        let alpha = if a[k][k] > T::zero() { -alpha } else { alpha };
        let mut v: Vec<T> = (0..n).map(|i| if i < k { T::zero() } else { a[i][k] }).collect();
        v[k] -= alpha;
        let vv = enorm(&v);
        if vv == T::zero() {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vv;
        }
        for j in 0..n {
            let s = (k..n).fold(T::zero(), |s, i| s + v[i] * a[i][j]);
            for i in k..n {
                a[i][j] -= T::lit(2.0) * v[i] * s;
            }
        }
        // q <- q H, with q stored row-major here
        for row in q.iter_mut() {
            let s = (k..n).fold(T::zero(), |s, i| s + row[i] * v[i]);
            for i in k..n {
                row[i] -= T::lit(2.0) * s * v[i];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[i][j] = T::zero();
        }
    }
    let qcols = (0..n).map(|j| (0..n).map(|i| q[i][j]).collect()).collect();
    (qcols, a)
}

/// Dogleg step solving `r x ~ qtb` inside the scaled trust region.
fn dogleg<T: Real>(r: &[Vec<T>], diag: &[T], qtb: &[T], delta: T) -> Vec<T> {
    let n = qtb.len();
    let eps = T::epsilon();
    let mut x = vec![T::zero(); n];
    for j in (0..n).rev() {
        let mut sum = T::zero();
        for i in j + 1..n {
            sum += r[j][i] * x[i];
        }
        let mut d = r[j][j];
        if d == T::zero() {
            d = (0..=j).fold(T::zero(), |m, i| m.max(r[i][j].abs())) * eps;
            if d == T::zero() {
                d = eps;
            }
        }
        x[j] = (qtb[j] - sum) / d;
    }
    let qnorm = enorm(&x.iter().zip(diag).map(|(a, b)| *a * *b).collect::<Vec<_>>());
    if qnorm <= delta {
        return x;
    }
    let mut g: Vec<T> = (0..n)
        .map(|j| (0..=j).fold(T::zero(), |s, i| s + r[i][j] * qtb[i]) / diag[j])
        .collect();
    let gnorm = enorm(&g);
    let mut sgnorm = T::zero();
    let mut alpha = delta / qnorm;
    if gnorm != T::zero() {
        for j in 0..n {
            g[j] = (g[j] / gnorm) / diag[j];
        }
        let rg: Vec<T> = (0..n).map(|i| (i..n).fold(T::zero(), |s, j| s + r[i][j] * g[j])).collect();
        let t = enorm(&rg);
        sgnorm = (gnorm / t) / t;
        alpha = T::zero();
        if sgnorm < delta {
            let bnorm = enorm(qtb);
            let dq = delta / qnorm;
            let sd = sgnorm / delta;
            let mut t = (bnorm / gnorm) * (bnorm / qnorm) * sd;
            t = t - dq * sd * sd + ((t - dq).powi(2) + (T::one() - dq * dq) * (T::one() - sd * sd)).sqrt();
            alpha = dq * (T::one() - sd * sd) / t;
        }
    }
    let t = (T::one() - alpha) * sgnorm.min(delta);
    (0..n).map(|j| t * g[j] + alpha * x[j]).collect()
}

/// Solves the square system `f(x) = 0` starting at `x0`. Always returns the
/// best iterate; check [`RootSolution::status`].
pub fn find_root<T, F>(mut f: F, x0: &[T], cfg: &SolverConfig<T>) -> RootSolution<T>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut nfev = 1usize;
    let mut njev = 0usize;
    let fail = |x: Vec<T>, fv: Vec<T>, nfev, njev, status| RootSolution {
        residue: if fv.is_empty() { T::infinity() } else { residue(&fv) },
        x,
        f: fv,
        evaluations: nfev,
        jacobians: njev,
        status,
    };
    let mut fv = match f(&x) {
        Ok(v) if v.len() == n => v,
        Ok(v) => {
            return fail(x, v, nfev, njev, RootStatus::EvaluationFailed("system is not square".into()))
        }
        Err(e) => return fail(x, Vec::new(), nfev, njev, RootStatus::EvaluationFailed(e.to_string())),
    };
    let mut fnorm = enorm(&fv);
    if residue(&fv) <= cfg.acceptance {
        return fail(x, fv, nfev, njev, RootStatus::Converged);
    }
    let mut diag = vec![T::one(); n];
    let mut delta = T::zero();
    let mut iter = 1usize;
    let (mut nslow1, mut nslow2) = (0usize, 0usize);
    let p1 = T::lit(0.1);
    let p5 = T::lit(0.5);
    'outer: loop {
        // Forward-difference Jacobian by columns.
        let mut jac: Vec<Vec<T>> = Vec::with_capacity(n);
        for j in 0..n {
            let h = cfg.fd_step * x[j].abs().max(T::one());
            let mut xp = x.clone();
            xp[j] += h;
            nfev += 1;
            match f(&xp) {
                Ok(v) => jac.push(v.iter().zip(&fv).map(|(a, b)| (*a - *b) / h).collect()),
                Err(e) => return fail(x, fv, nfev, njev, RootStatus::EvaluationFailed(e.to_string())),
            }
        }
        njev += 1;
        let colnorm: Vec<T> = jac.iter().map(|c| enorm(c)).collect();
        if iter == 1 {
            for j in 0..n {
                diag[j] = if colnorm[j] == T::zero() { T::one() } else { colnorm[j] };
            }
            let xnorm = enorm(&x.iter().zip(&diag).map(|(a, b)| *a * *b).collect::<Vec<_>>());
            delta = cfg.factor * xnorm;
            if delta == T::zero() {
                delta = cfg.factor;
            }
        } else {
            for j in 0..n {
                diag[j] = diag[j].max(colnorm[j]);
            }
        }
        let mut jeval = true;
        let mut ncsuc = 0usize;
        let mut ncfail = 0usize;
        loop {
            let (q, r) = qr(&jac);
            let qtf: Vec<T> = q.iter().map(|c| c.iter().zip(&fv).fold(T::zero(), |s, (a, b)| s + *a * *b)).collect();
            let p: Vec<T> = dogleg(&r, &diag, &qtf, delta).into_iter().map(|v| -v).collect();
            let pnorm = enorm(&p.iter().zip(&diag).map(|(a, b)| *a * *b).collect::<Vec<_>>());
            if iter == 1 {
                delta = delta.min(pnorm);
            }
            let xt: Vec<T> = x.iter().zip(&p).map(|(a, b)| *a + *b).collect();
            nfev += 1;
            let trial = f(&xt);
            let (ratio, actred, fnew) = match trial {
                Ok(fnew) => {
                    let fnorm1 = enorm(&fnew);
                    let actred = if fnorm1 < fnorm { T::one() - (fnorm1 / fnorm).powi(2) } else { -T::one() };
                    let rp: Vec<T> = (0..n)
                        .map(|i| (i..n).fold(T::zero(), |s, j| s + r[i][j] * p[j]) + qtf[i])
                        .collect();
                    let t = enorm(&rp);
                    let prered = if t < fnorm { T::one() - (t / fnorm).powi(2) } else { T::zero() };
                    let ratio = if prered > T::zero() { actred / prered } else { T::zero() };
                    (ratio, actred, Some((fnew, fnorm1)))
                }
                Err(_) => (T::zero(), -T::one(), None),
            };
            if ratio < p1 {
                ncsuc = 0;
                ncfail += 1;
                delta = p5 * delta;
            } else {
                ncfail = 0;
                ncsuc += 1;
                if ratio >= p5 || ncsuc > 1 {
                    delta = delta.max(pnorm / p5);
                }
                if (ratio - T::one()).abs() <= p1 {
                    delta = pnorm / p5;
                }
            }
            let fold = fv.clone();
            if ratio >= T::lit(1e-4) {
                if let Some((fnew, fnorm1)) = &fnew {
                    x = xt.clone();
                    fv = fnew.clone();
                    fnorm = *fnorm1;
                    iter += 1;
                }
            }
            nslow1 = if actred >= T::lit(1e-3) { 0 } else { nslow1 + 1 };
            if jeval {
                nslow2 = if actred >= p1 { 0 } else { nslow2 + 1 };
            }
            if residue(&fv) <= cfg.acceptance {
                return fail(x, fv, nfev, njev, RootStatus::Converged);
            }
            let xnorm = enorm(&x.iter().zip(&diag).map(|(a, b)| *a * *b).collect::<Vec<_>>());
            if delta <= cfg.xtol * xnorm || fnorm == T::zero() {
                return fail(x, fv, nfev, njev, RootStatus::StepTooSmall);
            }
            if nfev >= cfg.max_evaluations {
                return fail(x, fv, nfev, njev, RootStatus::MaxEvaluations);
            }
            if p1 * (p1 * delta).max(pnorm) <= T::epsilon() * xnorm {
                return fail(x, fv, nfev, njev, RootStatus::StepTooSmall);
            }
            if nslow2 == 5 || nslow1 == 10 {
                return fail(x, fv, nfev, njev, RootStatus::NoProgress);
            }
            if ncfail == 2 {
                continue 'outer;
            }
            if let Some((fnew, _)) = fnew {
                // Broyden update in the scaled norm.
                let dp: Vec<T> = (0..n).map(|j| diag[j] * diag[j] * p[j]).collect();
                let den = (0..n).fold(T::zero(), |s, j| s + dp[j] * p[j]);
                if den > T::zero() {
                    let jp: Vec<T> = (0..n).map(|i| (0..n).fold(T::zero(), |s, j| s + jac[j][i] * p[j])).collect();
                    for j in 0..n {
                        let w = dp[j] / den;
                        for i in 0..n {
                            jac[j][i] += (fnew[i] - fold[i] - jp[i]) * w;
                        }
                    }
                }
            }
            jeval = false;
        }
    }
}
