//! Generic numerical building blocks: quadrature, ODE stepping, root finding
//! and one-dimensional minimization.

pub mod minimize;
pub mod ode;
pub mod quadrature;
pub mod root;

pub use minimize::{minimize_amplitude, minimize_over_spare, AmplitudeMinimum, SpareFamily, SpareSearch, SpareStart};
pub use ode::{integrate_rk4, Node, StepControl};
pub use quadrature::{integrate_adaptive, integrate_adaptive_vec, Estimate, QuadraturePolicy};
pub use root::{find_root, RootSolution, RootStatus, SolverConfig};
