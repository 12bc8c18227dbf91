//! File formats, the shipped corpus and report rendering.

pub mod catalog;
pub mod config;
pub mod export;
pub mod report;
pub mod specfile;

pub use config::Config;
pub use report::{check, render_check, run_tables, CheckReport, Status};
pub use specfile::{Bath, NoiseKind, SpecFile};
