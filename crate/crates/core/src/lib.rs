//! Synthesis and verification of finite-duration spin-1/2 control pulses that
//! cancel classical noise to first or second order.
//!
//! All internal quantities use the pulse duration as the time unit. The
//! generic rotation kernel and numerics work over [`Real`] (`f32` or `f64`);
//! pulse synthesis and verification run in `f64`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod io;
pub mod kernel;
pub mod numerics;
pub mod pulse;
pub mod scalar;
pub mod synthesis;
pub mod trajectory;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Axis = kernel::Axis<f64>;
pub type AxisF32 = kernel::Axis<f32>;
pub type RotationState = kernel::RotationState<f64>;
pub type RotationStateF32 = kernel::RotationState<f32>;
pub type Su2 = kernel::Su2<f64>;
pub type Su2F32 = kernel::Su2<f32>;
pub type QuadraturePolicy = numerics::QuadraturePolicy<f64>;
pub type SolverConfig = numerics::SolverConfig<f64>;
pub type StepControl = numerics::StepControl<f64>;
