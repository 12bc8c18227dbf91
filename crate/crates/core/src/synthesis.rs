//! End-to-end pulse synthesis: seeded multi-start root finding, amplitude
//! minimization over a spare coefficient, and the dephasing-plus-flip
//! cancelling composite.

use std::fmt::Write as _;

use core::f64::consts::PI;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::conditions::{
    assemble_system, evaluate_conditions, Ansatz, ConditionPolicy, Family, NoiseModel, Reduction, ResidualSystem,
    ResidualVector, SystemDef,
};
use crate::error::{Error, Result};
use crate::numerics::minimize::minimize_over_spare;
use crate::numerics::{find_root, RootStatus, SolverConfig, SpareFamily, SpareSearch, SpareStart};
use crate::pulse::{Composite, FmPulse, Orientation, PiecewiseAm, PulseSpec};

#[derive(Debug, Clone, Copy)]
pub struct SynthesisConfig {
    pub solver: SolverConfig<f64>,
    pub policy: ConditionPolicy,
    pub seed: u64,
    /// Number of seeded cold starts.
    pub starts: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), policy: ConditionPolicy::default(), seed: 20_120_601, starts: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub index: usize,
    pub x0: Vec<f64>,
    pub x: Vec<f64>,
    pub residue: f64,
    pub evaluations: usize,
    pub amplitude: Option<f64>,
    pub status: RootStatus,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthesisLog {
    pub records: Vec<StartRecord>,
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", items.join(", "))
}

impl SynthesisLog {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let amp = r.amplitude.map_or("-".to_string(), |a| format!("{a:.8}"));
            let _ = writeln!(
                s,
                "start {:>3}: residue {:.3e} evaluations {:>4} amplitude {} status {:?} x0 {} x {}",
                r.index,
                r.residue,
                r.evaluations,
                amp,
                r.status,
                fmt_vec(&r.x0),
                fmt_vec(&r.x)
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub spec: PulseSpec,
    pub params: Vec<f64>,
    pub residuals: ResidualVector,
    pub start: usize,
    pub log: SynthesisLog,
}

/// Runs the root finder from every start in parallel and keeps the converged
/// solution of smallest amplitude (ties to the lower start index).
pub fn synthesize(system: &ResidualSystem, starts: &[Vec<f64>], cfg: &SynthesisConfig) -> Result<Synthesis> {
    if !system.is_square() {
        return Err(Error::DimensionMismatch { params: system.dim_params(), residuals: system.dim_residuals() });
    }
    if starts.is_empty() {
        return Err(Error::InvalidParameter("no starting points".into()));
    }
    let records: Vec<StartRecord> = starts
        .par_iter()
        .enumerate()
        .map(|(index, x0)| {
            let sol = find_root(|p: &[f64]| system.evaluate(p), x0, &cfg.solver);
            let amplitude = if sol.converged() { system.amplitude(&sol.x).ok() } else { None };
            StartRecord {
                index,
                x0: x0.clone(),
                x: sol.x,
                residue: sol.residue,
                evaluations: sol.evaluations,
                amplitude,
                status: sol.status,
            }
        })
        .collect();
    let best = records
        .iter()
        .filter_map(|r| r.amplitude.map(|a| (a, r)))
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .map(|(_, r)| r.clone());
    let log = SynthesisLog { records };
    let Some(best) = best else {
        let r = log.records.iter().min_by(|a, b| a.residue.total_cmp(&b.residue)).unwrap();
        return Err(Error::RootNotFound {
            residue: r.residue,
            evaluations: log.records.iter().map(|r| r.evaluations).sum(),
            reason: format!("none of {} starts converged", log.records.len()),
        });
    };
    let spec = system.spec(&best.x)?;
    let residuals = system.residuals(&best.x)?;
    Ok(Synthesis { spec, params: best.x, residuals, start: best.index, log })
}

fn piecewise_start(rng: &mut ChaCha8Rng, theta: f64, signs: &[i8], symmetric: bool) -> Vec<f64> {
    loop {
        let instants: Vec<f64> = if symmetric {
            let t1 = rng.random_range(0.01..0.3);
            let t2 = rng.random_range(t1 + 0.02..0.48);
            vec![t1, t2, 1.0 - t2, 1.0 - t1]
        } else {
            let mut v: Vec<f64> = (1..signs.len()).map(|_| rng.random_range(0.01..0.99)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let p = PiecewiseAm { theta, amplitude: 1.0, instants: instants.clone(), signs: signs.to_vec() };
        if p.validate().is_err() {
            continue;
        }
        let unit = p.psi(1.0);
        if unit.abs() < 0.05 || theta / unit <= 0.0 {
            continue;
        }
        let v0 = theta / unit;
        return if symmetric {
            vec![instants[0], instants[1], v0]
        } else {
            instants.into_iter().chain([v0]).collect()
        };
    }
}

/// Seeded cold starts. FM systems begin with the plain rectangular pulse
/// (`V0 = pi`, zero coefficients) followed by random perturbations of it.
pub fn cold_starts(system: &ResidualSystem, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let d = &system.def;
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            match d.family {
                Family::Fm => {
                    let n = system.dim_params() - 1;
                    if i == 0 {
                        return std::iter::once(PI).chain(std::iter::repeat_n(0.0, n)).collect();
                    }
                    let v0 = PI * rng.random_range(1.0..3.5);
                    std::iter::once(v0)
                        .chain((0..n).map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            0.6 * z
                        }))
                        .collect()
                }
                Family::AmPiecewise => {
                    piecewise_start(&mut rng, d.theta, &d.ansatz.signs, d.reduction == Reduction::Symmetric)
                }
                Family::AmContinuous => vec![rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)],
            }
        })
        .collect()
}

/// Published or user-supplied parameters as a starting point for `system`.
pub fn start_from_spec(system: &ResidualSystem, spec: &PulseSpec) -> Result<Vec<f64>> {
    system.params_of(spec)
}

/// Rounds every entry to `digits` significant digits.
pub fn round_significant(x: &[f64], digits: u32) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v == 0.0 {
                return 0.0;
            }
            let e = v.abs().log10().floor() as i32 + 1 - digits as i32;
            let f = 10f64.powi(e);
            (v / f).round() * f
        })
        .collect()
}

/// FM family whose coefficient `spare` is pinned to the scanned value.
struct PinnedFamily<'a> {
    def: SystemDef,
    spare: usize,
    cfg: &'a SynthesisConfig,
}

impl PinnedFamily<'_> {
    fn system(&self, value: f64) -> Result<ResidualSystem> {
        let mut def = self.def.clone();
        def.ansatz.fixed.push((self.spare, value));
        assemble_system(def, self.cfg.policy)
    }
}

impl SpareFamily<f64> for PinnedFamily<'_> {
    fn solve(&self, spare: f64, warm: &[f64]) -> Option<(Vec<f64>, f64)> {
        let system = self.system(spare).ok()?;
        let sol = find_root(|p: &[f64]| system.evaluate(p), warm, &self.cfg.solver);
        if !sol.converged() {
            return None;
        }
        let amp = system.amplitude(&sol.x).ok()?;
        Some((sol.x, amp))
    }
}

/// One candidate spare coefficient with its scan interval and warm start
/// for the square part.
#[derive(Debug, Clone)]
pub struct SpareChoice {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub guess: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MinimizedRecord {
    pub index: usize,
    pub spare: Option<f64>,
    pub amplitude: Option<f64>,
    pub solves: usize,
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub spec: PulseSpec,
    pub residuals: ResidualVector,
    pub spare_index: usize,
    pub spare_value: f64,
    pub amplitude: f64,
    pub records: Vec<MinimizedRecord>,
}

/// Minimizes the FM amplitude over the one-parameter root family obtained by
/// adding each candidate spare coefficient to the square ansatz of `def`.
/// Candidates run in parallel; the smallest amplitude wins, ties going to the
/// smaller spare magnitude and then the earlier candidate.
pub fn minimize_fm(def: &SystemDef, choices: &[SpareChoice], search: &SpareSearch<f64>, cfg: &SynthesisConfig) -> Result<Minimized> {
    if def.family != Family::Fm {
        return Err(Error::InvalidParameter("amplitude minimization is implemented for FM pulses".into()));
    }
    let square = assemble_system(def.clone(), cfg.policy)?;
    if !square.is_square() {
        return Err(Error::DimensionMismatch { params: square.dim_params(), residuals: square.dim_residuals() });
    }
    let runs: Vec<(MinimizedRecord, Option<Vec<f64>>)> = choices
        .par_iter()
        .map(|c| {
            let fam = PinnedFamily { def: def.clone(), spare: c.index, cfg };
            let start = SpareStart { lo: c.lo, hi: c.hi, guess: c.guess.clone() };
            match minimize_over_spare(&fam, &start, search) {
                Some((spare, amp, x, solves)) => {
                    (MinimizedRecord { index: c.index, spare: Some(spare), amplitude: Some(amp), solves }, Some(x))
                }
                None => (MinimizedRecord { index: c.index, spare: None, amplitude: None, solves: 0 }, None),
            }
        })
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (r, _)) in runs.iter().enumerate() {
        if let (Some(a), Some(s)) = (r.amplitude, r.spare) {
            let better = match best {
                None => true,
                Some((_, ba, bs)) => a < ba || (a == ba && s.abs() < bs.abs()),
            };
            if better {
                best = Some((i, a, s));
            }
        }
    }
    let Some((i, amplitude, spare_value)) = best else {
        return Err(Error::RootNotFound {
            residue: f64::INFINITY,
            evaluations: 0,
            reason: "no feasible root from any spare choice".into(),
        });
    };
    let fam = PinnedFamily { def: def.clone(), spare: choices[i].index, cfg };
    let system = fam.system(spare_value)?;
    let x = runs[i].1.clone().unwrap();
    let spec = system.spec(&x)?;
    let residuals = evaluate_conditions(&spec, def.order, &def.noise, def.reduction, &cfg.policy)?;
    Ok(Minimized {
        spec,
        residuals,
        spare_index: choices[i].index,
        spare_value,
        amplitude,
        records: runs.into_iter().map(|r| r.0).collect(),
    })
}

/// Square FM system definition with the given free coefficients.
pub fn fm_system(order: u8, noise: NoiseModel, theta: f64, free: &[usize], reduction: Reduction) -> SystemDef {
    SystemDef { family: Family::Fm, order, noise, theta, ansatz: Ansatz::fm(free), reduction }
}

/// The pulse followed by its time reverse. For a second-order
/// general-decoherence pi pulse the pair is a net `-1` that cancels
/// dephasing and spin flips to second order.
pub fn compose_xy8_replacement(pi_pulse: &FmPulse, tolerance: f64, policy: &ConditionPolicy) -> Result<Composite> {
    let spec = PulseSpec::Fm(pi_pulse.clone());
    let r = evaluate_conditions(&spec, 2, &NoiseModel::unit_general(), Reduction::Full, policy)?;
    let bad: Vec<String> = r
        .entries
        .iter()
        .filter(|e| e.value.abs() > tolerance)
        .map(|e| format!("{} = {:.3e}", e.name, e.value))
        .collect();
    if !bad.is_empty() {
        return Err(Error::FailsCheck(bad.join(", ")));
    }
    Ok(Composite { base: pi_pulse.clone(), pattern: vec![Orientation::Forward, Orientation::Reversed] })
}
