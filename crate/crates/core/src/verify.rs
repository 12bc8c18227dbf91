//! Monte-Carlo ground truth: exact propagation under sampled classical noise
//! and log-log fits of the ensemble-averaged error against noise strength.
//!
//! Noise strength is scanned at fixed unit duration. Every scale reuses the
//! same underlying random numbers, and realizations come in antithetic pairs
//! with all fluctuation signs flipped.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::conditions::NoiseModel;
use crate::error::{Error, Result};
use crate::kernel::{magnus_term, Su2};
use crate::numerics::QuadraturePolicy;
use crate::pulse::{ControlField, PulseSpec};
use crate::trajectory::{propagate, PropagationPolicy};
use crate::vec3::{add, cross, norm, scale, sub, Vec3};

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6
/// Floor on slices between consecutive breakpoints, for short switching ramps.
const MIN_SLICES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseGenerator {
    /// Constant in time within each realization.
    StaticGaussian,
    /// Exponentially correlated Gaussian noise. The correlation time is
    /// `tau_c_at_max` at the largest scale and grows as `1 / lambda` below it,
    /// so that every scale is the same physical noise seen over a shorter pulse.
    OrnsteinUhlenbeck { tau_c_at_max: f64 },
}

impl NoiseGenerator {
    pub fn tag(&self) -> &'static str {
        match self {
            NoiseGenerator::StaticGaussian => "static-gaussian",
            NoiseGenerator::OrnsteinUhlenbeck { .. } => "ornstein-uhlenbeck",
        }
    }
}

/// One sampled noise path on the simulation nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub times: Vec<f64>,
    pub path: Vec<Vec3<f64>>,
    pub generator: NoiseGenerator,
    pub seed: u64,
    pub index: u64,
}

/// Samples realization `index` of `noise * lambda`. Odd indices mirror the
/// fluctuations of the preceding even index. `tau_c` is ignored for static noise.
pub fn realize(
    noise: &NoiseModel,
    generator: NoiseGenerator,
    tau_c: f64,
    times: &[f64],
    lambda: f64,
    seed: u64,
    index: u64,
) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index / 2);
    let sign = if index.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut normal = || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sign * z
    };
    let sd = [noise.var_x.sqrt(), noise.var_x.sqrt(), noise.var_z.sqrt()];
    let mean = [0.0, 0.0, noise.eta_mean];
    let emit = |x: [f64; 3]| -> Vec3<f64> { std::array::from_fn(|k| lambda * (mean[k] + sd[k] * x[k])) };
    let path = match generator {
        NoiseGenerator::StaticGaussian => {
            let x = [normal(), normal(), normal()];
            vec![emit(x); times.len()]
        }
        NoiseGenerator::OrnsteinUhlenbeck { .. } => {
            let mut x = [normal(), normal(), normal()];
            let mut prev = times.first().copied().unwrap_or(0.0);
            times
                .iter()
                .map(|&t| {
                    let decay = (-(t - prev) / tau_c).exp();
                    let kick = (1.0 - decay * decay).max(0.0).sqrt();
                    for xk in x.iter_mut() {
                        *xk = decay * *xk + kick * normal();
                    }
                    prev = t;
                    emit(x)
                })
                .collect()
        }
    };
    NoiseRealization { times: times.to_vec(), path, generator, seed, index }
}

/// Two-point Gauss nodes per slice with the control sampled there, plus the
/// noiseless propagator on the same grid. Slice edges include every control
/// breakpoint.
#[derive(Debug, Clone)]
pub struct SimGrid {
    pub widths: Vec<f64>,
    pub times: Vec<f64>,
    pub control: Vec<Vec3<f64>>,
    pub ideal: Su2<f64>,
}

impl SimGrid {
    pub fn new(spec: &PulseSpec, slices_per_unit: usize) -> Result<Self> {
        spec.validate()?;
        let duration = spec.duration();
        let mut edges = vec![0.0];
        edges.extend(spec.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < duration));
        edges.push(duration);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut widths = Vec::new();
        let mut times = Vec::new();
        for w in edges.windows(2) {
            let n = ((slices_per_unit as f64 * (w[1] - w[0])).ceil() as usize).max(MIN_SLICES);
            let dt = (w[1] - w[0]) / n as f64;
            for i in 0..n {
                let mid = w[0] + (i as f64 + 0.5) * dt;
                widths.push(dt);
                times.push(mid - GAUSS_OFFSET * dt);
                times.push(mid + GAUSS_OFFSET * dt);
            }
        }
        let control: Vec<Vec3<f64>> = times.iter().map(|&t| spec.control(t)).collect();
        let mut grid = Self { widths, times, control, ideal: Su2::identity() };
        grid.ideal = grid.propagate(|_| [0.0; 3]);
        Ok(grid)
    }

    /// Fourth-order Magnus product with total field `control + noise(node)`.
    pub fn propagate(&self, noise: impl Fn(usize) -> Vec3<f64>) -> Su2<f64> {
        let mut u = Su2::identity();
        for (i, &dt) in self.widths.iter().enumerate() {
            let h1 = add(&self.control[2 * i], &noise(2 * i));
            let h2 = add(&self.control[2 * i + 1], &noise(2 * i + 1));
            let k = (3f64.sqrt() / 6.0) * dt;
            let w = scale(&add(&scale(&add(&h1, &h2), 0.5), &scale(&cross(&h2, &h1), k)), dt);
            u = Su2::exp_pauli(&w).mul(&u);
        }
        u
    }

    /// `(U_p, U_c)` under a constant noise vector.
    pub fn simulate_static(&self, eta: &Vec3<f64>) -> (Su2<f64>, Su2<f64>) {
        let up = self.propagate(|_| *eta);
        (up, self.ideal.adjoint().mul(&up))
    }

    /// `(U_p, U_c)` for one realization, with `U_c = P^-1 U_p`.
    pub fn simulate(&self, r: &NoiseRealization) -> (Su2<f64>, Su2<f64>) {
        let up = self.propagate(|i| r.path[i]);
        (up, self.ideal.adjoint().mul(&up))
    }
}

/// Exact evolution of `spec` under one realization sampled on the grid of
/// `SimGrid::new(spec, slices_per_unit)`.
pub fn simulate_exact(spec: &PulseSpec, r: &NoiseRealization, slices_per_unit: usize) -> Result<(Su2<f64>, Su2<f64>)> {
    let grid = SimGrid::new(spec, slices_per_unit)?;
    if r.path.len() != grid.times.len() {
        return Err(Error::DimensionMismatch { params: r.path.len(), residuals: grid.times.len() });
    }
    Ok(grid.simulate(r))
}

/// `U_c` predicted by the first two averaged Magnus terms for static
/// longitudinal noise of strength `eta`.
pub fn magnus_reconstruction(spec: &PulseSpec, eta: f64, policy: &QuadraturePolicy<f64>) -> Result<Su2<f64>> {
    let traj = propagate(spec, &PropagationPolicy::default())?;
    let noise = NoiseModel::dephasing(eta, 0.0);
    let h = add(&magnus_term(1, &traj, &noise, policy)?, &magnus_term(2, &traj, &noise, policy)?);
    Ok(Su2::exp_pauli(&h))
}

/// Spectral norm of `<U> - 1` for an averaged quaternion `(a0, a)`, after
/// the sign choice (global phase) that brings it closest to the identity.
pub fn deviation_from_identity(a0: f64, a: &Vec3<f64>) -> f64 {
    let a0 = a0.abs();
    ((a0 - 1.0).powi(2) + norm(a).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub ensemble: usize,
    pub slices_per_unit: usize,
    pub seed: u64,
    /// Batches used for Monte-Carlo error bars.
    pub batches: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { ensemble: 10_000, slices_per_unit: 3000, seed: 7, batches: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    pub lambda: f64,
    pub tau_c: Option<f64>,
    /// `||<U_c> - 1||`.
    pub deviation: f64,
    pub sigma: f64,
    /// `max_alpha ||<U_c^dag sigma_alpha U_c> - sigma_alpha||`.
    pub observable: f64,
    pub observable_sigma: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    n: usize,
    w: f64,
    q: Vec3<f64>,
    d: [[f64; 3]; 3],
}

impl Accum {
    fn push(&mut self, u: &Su2<f64>) {
        self.n += 1;
        self.w += u.w;
        self.q = add(&self.q, &u.q);
        let m = u.toggling_matrix();
        for i in 0..3 {
            for j in 0..3 {
                self.d[i][j] += m[i][j];
            }
        }
    }

    fn merge(&mut self, o: &Accum) {
        self.n += o.n;
        self.w += o.w;
        self.q = add(&self.q, &o.q);
        for i in 0..3 {
            for j in 0..3 {
                self.d[i][j] += o.d[i][j];
            }
        }
    }

    fn deviations(&self) -> (f64, f64) {
        let n = self.n as f64;
        let u = deviation_from_identity(self.w / n, &scale(&self.q, 1.0 / n));
        let obs = (0..3)
            .map(|a| {
                let col: Vec3<f64> = std::array::from_fn(|b| self.d[b][a] / n - if a == b { 1.0 } else { 0.0 });
                norm(&col)
            })
            .fold(0.0, f64::max);
        (u, obs)
    }
}

fn tau_c_for(generator: NoiseGenerator, lambda: f64, lambda_max: f64) -> Option<f64> {
    match generator {
        NoiseGenerator::StaticGaussian => None,
        NoiseGenerator::OrnsteinUhlenbeck { tau_c_at_max } => Some(tau_c_at_max * lambda_max / lambda),
    }
}

fn ensemble_on_grid(
    grid: &SimGrid,
    noise: &NoiseModel,
    generator: NoiseGenerator,
    lambda: f64,
    tau_c: Option<f64>,
    cfg: &VerifyConfig,
) -> Result<ScalePoint> {
    let pairs = cfg.ensemble.div_ceil(2).max(1);
    let batches = cfg.batches.clamp(1, pairs);
    let per = pairs.div_ceil(batches);
    let tc = tau_c.unwrap_or(f64::INFINITY);
    let parts: Vec<Accum> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = Accum::default();
            for p in (b * per)..((b + 1) * per).min(pairs) {
                for idx in [2 * p as u64, 2 * p as u64 + 1] {
                    let r = realize(noise, generator, tc, &grid.times, lambda, cfg.seed, idx);
                    acc.push(&grid.simulate(&r).1);
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::default();
    for a in &parts {
        total.merge(a);
    }
    let (deviation, observable) = total.deviations();
    let spread = |k: usize| -> f64 {
        let used: Vec<f64> = parts.iter().filter(|a| a.n > 0).map(|a| if k == 0 { a.deviations().0 } else { a.deviations().1 }).collect();
        let m = used.len() as f64;
        if m < 2.0 {
            return 0.0;
        }
        let mean = used.iter().sum::<f64>() / m;
        (used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() / m.sqrt()
    };
    Ok(ScalePoint { lambda, tau_c, deviation, sigma: spread(0), observable, observable_sigma: spread(1) })
}

/// Ensemble averages at a single noise scale.
pub fn ensemble_point(
    spec: &PulseSpec,
    noise: &NoiseModel,
    generator: NoiseGenerator,
    lambda: f64,
    tau_c: Option<f64>,
    cfg: &VerifyConfig,
) -> Result<ScalePoint> {
    noise.validate()?;
    let grid = SimGrid::new(spec, cfg.slices_per_unit)?;
    ensemble_on_grid(&grid, noise, generator, lambda, tau_c, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub sigma: f64,
    pub intercept: f64,
    pub used: usize,
}

/// Weighted least squares of `ln d` against `ln lambda`. Points within three
/// standard errors of zero sit on the Monte-Carlo floor and are dropped.
pub fn fit_slope(points: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    let usable: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(_, d, s)| *d > 0.0 && *d > 3.0 * s)
        .map(|&(l, d, s)| (l.ln(), d.ln(), (s / d).max(1e-3)))
        .collect();
    if usable.len() < 5 {
        return Err(Error::FitFailure(format!(
            "only {} of {} points lie above the Monte-Carlo floor; increase the ensemble",
            usable.len(),
            points.len()
        )));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, s) in &usable {
        let w = 1.0 / (s * s);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = usable.iter().map(|&(x, y, s)| ((y - intercept - slope * x) / s).powi(2)).sum();
    let dof = (usable.len() - 2) as f64;
    let sigma = (sw / det).sqrt() * (chi2 / dof).max(1.0).sqrt();
    Ok(SlopeFit { slope, sigma, intercept, used: usable.len() })
}

fn check_scales(scales: &[f64]) -> Result<f64> {
    if scales.len() < 5 || scales.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("need at least five positive noise scales".into()));
    }
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::InvalidParameter("noise scales must span at least 1.5 decades".into()));
    }
    Ok(hi)
}

/// `n` geometrically spaced scales from `lo` to `hi`.
pub fn geometric_scales(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub generator: NoiseGenerator,
    pub noise: NoiseModel,
    pub ensemble: usize,
    pub points: Vec<ScalePoint>,
    pub fit: Result<SlopeFit, String>,
    pub observable_fit: Result<SlopeFit, String>,
}

impl VerificationReport {
    /// Slope within `[lo, hi]`.
    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        self.fit.as_ref().is_ok_and(|f| f.slope >= lo && f.slope <= hi)
    }

    /// Both deviation measures scale alike: slopes agree within three
    /// combined standard errors or 0.3, whichever is larger.
    pub fn averaging_consistent(&self) -> bool {
        match (&self.fit, &self.observable_fit) {
            (Ok(a), Ok(b)) => (a.slope - b.slope).abs() <= (3.0 * a.sigma.hypot(b.sigma)).max(0.3),
            _ => false,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "generator: {}", self.generator.tag());
        let _ = writeln!(s, "noise: eta_mean={:?} var_z={:?} var_x={:?}", self.noise.eta_mean, self.noise.var_z, self.noise.var_x);
        let _ = writeln!(s, "ensemble: {}", self.ensemble);
        let _ = writeln!(s, "{:>12} {:>14} {:>12} {:>14} {:>12} {:>10}", "lambda", "d", "sigma_d", "d_obs", "sigma_obs", "tau_c");
        for p in &self.points {
            let tc = p.tau_c.map_or("-".to_string(), |t| format!("{t:.4}"));
            let _ = writeln!(
                s,
                "{:>12.6e} {:>14.6e} {:>12.3e} {:>14.6e} {:>12.3e} {:>10}",
                p.lambda, p.deviation, p.sigma, p.observable, p.observable_sigma, tc
            );
        }
        for (label, fit) in [("slope", &self.fit), ("slope_obs", &self.observable_fit)] {
            match fit {
                Ok(f) => {
                    let _ = writeln!(s, "{label}: {:.4} +- {:.4} ({} points)", f.slope, f.sigma, f.used);
                }
                Err(e) => {
                    let _ = writeln!(s, "{label}: fit failed: {e}");
                }
            }
        }
        s
    }
}

/// Ensemble deviation at every scale and the fitted log-log slope.
pub fn scaling_exponent(
    spec: &PulseSpec,
    noise: &NoiseModel,
    generator: NoiseGenerator,
    scales: &[f64],
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    noise.validate()?;
    let lambda_max = check_scales(scales)?;
    let grid = SimGrid::new(spec, cfg.slices_per_unit)?;
    let points = scales
        .iter()
        .map(|&l| ensemble_on_grid(&grid, noise, generator, l, tau_c_for(generator, l, lambda_max), cfg))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_slope(&points.iter().map(|p| (p.lambda, p.deviation, p.sigma)).collect::<Vec<_>>()).map_err(|e| e.to_string());
    let observable_fit =
        fit_slope(&points.iter().map(|p| (p.lambda, p.observable, p.observable_sigma)).collect::<Vec<_>>()).map_err(|e| e.to_string());
    Ok(VerificationReport { generator, noise: *noise, ensemble: cfg.ensemble, points, fit, observable_fit })
}

/// Re-establishes that averaging `U_c` suffices: fits both the unitary and
/// the observable deviations and reports whether they share an exponent.
pub fn averaging_consistency(
    spec: &PulseSpec,
    noise: &NoiseModel,
    generator: NoiseGenerator,
    scales: &[f64],
    cfg: &VerifyConfig,
) -> Result<(VerificationReport, bool)> {
    let r = scaling_exponent(spec, noise, generator, scales, cfg)?;
    let ok = r.averaging_consistent();
    Ok((r, ok))
}

/// Largest entry change of `U_p` when the slice count doubles.
pub fn slice_convergence(spec: &PulseSpec, r_noise: Vec3<f64>, slices_per_unit: usize) -> Result<f64> {
    let a = SimGrid::new(spec, slices_per_unit)?.propagate(|_| r_noise);
    let b = SimGrid::new(spec, 2 * slices_per_unit)?.propagate(|_| r_noise);
    let dq = sub(&a.q, &b.q);
    Ok(dq.iter().fold((a.w - b.w).abs(), |m, x| m.max(x.abs())))
}
