use rayon::prelude::*;

use super::{evaluate_conditions, ConditionPolicy, NoiseModel, Reduction, ResidualVector};
use crate::error::{Error, Result};
use crate::pulse::{ContinuousAm, FmPulse, PiecewiseAm, PulseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    AmPiecewise,
    AmContinuous,
    /// Frequency modulation, optionally with a switched envelope.
    Fm,
}

/// Free and pinned parameters of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    /// Free FM coefficient indices.
    pub free: Vec<usize>,
    /// FM coefficients held at fixed values.
    pub fixed: Vec<(usize, f64)>,
    pub switching_time: Option<f64>,
    /// Piecewise AM sign pattern; its length fixes the number of segments.
    pub signs: Vec<i8>,
}

impl Default for Ansatz {
    fn default() -> Self {
        Self { free: vec![], fixed: vec![], switching_time: None, signs: vec![1, -1, 1, -1, 1] }
    }
}

impl Ansatz {
    pub fn fm(free: &[usize]) -> Self {
        Self { free: free.to_vec(), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef {
    pub family: Family,
    pub order: u8,
    pub noise: NoiseModel,
    pub theta: f64,
    pub ansatz: Ansatz,
    pub reduction: Reduction,
}

/// Residual function over a stable parameter layout.
///
/// Layouts: piecewise AM symmetric `[tau1, tau2, v0]`, full `[tau_1..tau_n, v0]`;
/// continuous AM `[a, b]`; FM `[V0, b_k for k in ansatz.free]`.
#[derive(Debug, Clone)]
pub struct ResidualSystem {
    pub def: SystemDef,
    pub policy: ConditionPolicy,
    param_names: Vec<String>,
    residual_count: usize,
}

fn residual_count(def: &SystemDef) -> usize {
    let o2 = (def.order >= 2) as usize;
    let general = def.noise.is_general();
    match (def.family, def.reduction) {
        (Family::AmPiecewise, Reduction::Full) | (Family::AmContinuous, Reduction::Full) => 3 + o2,
        (Family::AmPiecewise, Reduction::Symmetric) => 2 + o2,
        (Family::AmContinuous, Reduction::Symmetric) => 1 + o2,
        (Family::Fm, Reduction::Full) => 5 + o2 * if general { 6 } else { 3 },
        (Family::Fm, Reduction::Symmetric) => 2 + o2 * if general { 4 } else { 2 },
    }
}

/// Builds the residual system for a family, order, noise model and target.
pub fn assemble_system(def: SystemDef, policy: ConditionPolicy) -> Result<ResidualSystem> {
    def.noise.validate()?;
    if !(1..=2).contains(&def.order) {
        return Err(Error::InvalidParameter(format!("order must be 1 or 2, got {}", def.order)));
    }
    let a = &def.ansatz;
    let param_names: Vec<String> = match def.family {
        Family::AmPiecewise | Family::AmContinuous if def.noise.is_general() => {
            return Err(Error::InvalidParameter("amplitude modulation is defined for pure dephasing only".into()));
        }
        Family::AmPiecewise => {
            if a.signs.is_empty() || a.signs.iter().any(|s| s.abs() != 1) {
                return Err(Error::InvalidParameter("sign pattern must be non-empty and +-1".into()));
            }
            match def.reduction {
                Reduction::Symmetric => {
                    if a.signs.len() != 5 {
                        return Err(Error::InvalidParameter("symmetric piecewise AM needs five segments".into()));
                    }
                    vec!["tau1".into(), "tau2".into(), "v0".into()]
                }
                Reduction::Full => {
                    let mut n: Vec<String> = (1..a.signs.len()).map(|i| format!("tau{i}")).collect();
                    n.push("v0".into());
                    n
                }
            }
        }
        Family::AmContinuous => vec!["a".into(), "b".into()],
        Family::Fm => {
            let mut seen = a.free.clone();
            seen.extend(a.fixed.iter().map(|f| f.0));
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) || seen.first() == Some(&0) {
                return Err(Error::InvalidParameter("coefficient indices must be distinct and start at 1".into()));
            }
            if def.reduction == Reduction::Symmetric
                && (a.free.iter().any(|k| k % 2 == 1) || a.fixed.iter().any(|(k, b)| k % 2 == 1 && *b != 0.0))
            {
                return Err(Error::InvalidParameter("symmetric FM ansatz allows even coefficients only".into()));
            }
            std::iter::once("V0".to_string()).chain(a.free.iter().map(|k| format!("b{k}"))).collect()
        }
    };
    let residual_count = residual_count(&def);
    if param_names.len() < residual_count {
        return Err(Error::DimensionMismatch { params: param_names.len(), residuals: residual_count });
    }
    Ok(ResidualSystem { def, policy, param_names, residual_count })
}

impl ResidualSystem {
    pub fn parameter_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn dim_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn dim_residuals(&self) -> usize {
        self.residual_count
    }

    pub fn is_square(&self) -> bool {
        self.dim_params() == self.residual_count
    }

    pub fn spec(&self, p: &[f64]) -> Result<PulseSpec> {
        if p.len() != self.dim_params() {
            return Err(Error::DimensionMismatch { params: p.len(), residuals: self.dim_params() });
        }
        let d = &self.def;
        Ok(match d.family {
            Family::AmPiecewise => match d.reduction {
                Reduction::Symmetric => {
                    let mut s = PiecewiseAm::symmetric(d.theta, p[0], p[1], p[2]);
                    s.signs = d.ansatz.signs.clone();
                    PulseSpec::PiecewiseAm(s)
                }
                Reduction::Full => PulseSpec::PiecewiseAm(PiecewiseAm {
                    theta: d.theta,
                    amplitude: p[p.len() - 1],
                    instants: p[..p.len() - 1].to_vec(),
                    signs: d.ansatz.signs.clone(),
                }),
            },
            Family::AmContinuous => PulseSpec::ContinuousAm(ContinuousAm { theta: d.theta, a: p[0], b: p[1] }),
            Family::Fm => {
                let mut coefficients: Vec<(usize, f64)> = d.ansatz.free.iter().copied().zip(p[1..].iter().copied()).collect();
                coefficients.extend(d.ansatz.fixed.iter().copied());
                coefficients.sort_by_key(|c| c.0);
                PulseSpec::Fm(FmPulse { theta: d.theta, amplitude: p[0], coefficients, switching_time: d.ansatz.switching_time })
            }
        })
    }

    /// Parameter vector of a compatible spec. Coefficients outside the ansatz are ignored.
    pub fn params_of(&self, spec: &PulseSpec) -> Result<Vec<f64>> {
        let mismatch = || Error::InvalidParameter("spec does not belong to this family".into());
        match (self.def.family, spec) {
            (Family::AmPiecewise, PulseSpec::PiecewiseAm(s)) => match self.def.reduction {
                Reduction::Symmetric if s.instants.len() == 4 => Ok(vec![s.instants[0], s.instants[1], s.amplitude]),
                Reduction::Full if s.instants.len() + 1 == self.def.ansatz.signs.len() => {
                    let mut v = s.instants.clone();
                    v.push(s.amplitude);
                    Ok(v)
                }
                _ => Err(mismatch()),
            },
            (Family::AmContinuous, PulseSpec::ContinuousAm(s)) => Ok(vec![s.a, s.b]),
            (Family::Fm, PulseSpec::Fm(s)) => {
                Ok(std::iter::once(s.amplitude).chain(self.def.ansatz.free.iter().map(|k| s.coefficient(*k))).collect())
            }
            _ => Err(mismatch()),
        }
    }

    pub fn residuals(&self, p: &[f64]) -> Result<ResidualVector> {
        let spec = self.spec(p)?;
        evaluate_conditions(&spec, self.def.order, &self.def.noise, self.def.reduction, &self.policy)
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.residuals(p)?.values())
    }

    /// Peak control amplitude of the parametrized pulse.
    pub fn amplitude(&self, p: &[f64]) -> Result<f64> {
        Ok(self.spec(p)?.peak_amplitude())
    }
}

/// Five times the largest residual change when any printed parameter of
/// `spec` moves by one unit in its last printed decimal.
pub fn sensitivity_tolerance(
    spec: &PulseSpec,
    order: u8,
    noise: &NoiseModel,
    policy: &ConditionPolicy,
    decimals: u32,
) -> Result<f64> {
    let params = spec.parameters();
    let base = evaluate_conditions(spec, order, noise, Reduction::Full, policy)?.values();
    let unit = 10f64.powi(-(decimals as i32));
    let jobs: Vec<(usize, f64)> = (0..params.len()).flat_map(|j| [(j, unit), (j, -unit)]).collect();
    let changes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(j, step)| {
            let mut p = params.clone();
            p[j] += step;
            let r = evaluate_conditions(&spec.with_parameters(&p)?, order, noise, Reduction::Full, policy)?.values();
            Ok(r.iter().zip(&base).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        })
        .collect();
    let mut worst = 0.0f64;
    for c in changes {
        worst = worst.max(c?);
    }
    Ok(5.0 * worst)
}
