//! Optional TOML configuration for tolerances and seeds.

use std::path::Path;

use serde::Deserialize;

use crate::conditions::ConditionPolicy;
use crate::error::{Error, Result};
use crate::numerics::{QuadraturePolicy, SolverConfig, StepControl};
use crate::trajectory::PropagationPolicy;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    pub local_tol: f64,
    pub max_step: f64,
    pub panels_per_unit: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub acceptance: f64,
    pub max_evaluations: usize,
    pub fd_step: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSection {
    pub seed: u64,
    pub starts: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub ensemble: usize,
    pub slices: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Tolerance for specs without printed-precision metadata.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub quadrature: QuadratureSection,
    pub propagation: PropagationSection,
    pub solver: SolverSection,
    pub synthesis: SynthesisSection,
    pub verify: VerifySection,
    pub check: CheckSection,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadraturePolicy::<f64>::default();
        Self { abs_tol: q.abs_tol, max_subdivisions: q.max_subdivisions }
    }
}

impl Default for PropagationSection {
    fn default() -> Self {
        let p = PropagationPolicy::default();
        Self { local_tol: p.step.local_tol, max_step: p.step.max_step, panels_per_unit: p.panels_per_unit }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::<f64>::default();
        Self { acceptance: s.acceptance, max_evaluations: s.max_evaluations, fd_step: s.fd_step }
    }
}

impl Default for SynthesisSection {
    fn default() -> Self {
        Self { seed: 20_120_601, starts: 32 }
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { seed: 7, ensemble: 10_000, slices: 3000 }
    }
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { tolerance: 1e-8 }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            message: e.message().to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn condition_policy(&self) -> ConditionPolicy {
        let step = StepControl { local_tol: self.propagation.local_tol, max_step: self.propagation.max_step, ..StepControl::default() };
        ConditionPolicy {
            propagation: PropagationPolicy { step, panels_per_unit: self.propagation.panels_per_unit },
            quadrature: QuadraturePolicy {
                abs_tol: self.quadrature.abs_tol,
                max_subdivisions: self.quadrature.max_subdivisions,
                ..QuadraturePolicy::default()
            },
        }
    }

    pub fn solver(&self) -> SolverConfig<f64> {
        SolverConfig {
            acceptance: self.solver.acceptance,
            max_evaluations: self.solver.max_evaluations,
            fd_step: self.solver.fd_step,
            ..SolverConfig::default()
        }
    }
}
