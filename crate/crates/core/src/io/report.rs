//! Residual checks of spec files and their text reports.

use std::fmt::Write as _;
use std::time::Instant;

use super::specfile::{Bath, SpecFile};
use crate::conditions::{evaluate_conditions, sensitivity_tolerance, ConditionPolicy, NoiseModel, Reduction};
use crate::error::Result;

pub const QUANTUM_SKIP: &str = "quantum bath out of scope";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub label: String,
    pub order: u8,
    pub noise: NoiseModel,
    pub rows: Vec<CheckRow>,
    pub status: Status,
    pub skip_reason: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.value.abs()))
    }

    pub fn tolerance(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.tolerance))
    }
}

/// Tolerance for a file: the sensitivity bound when its parameters were
/// printed rounded, never below `floor`.
pub fn tolerance_for(file: &SpecFile, noise: &NoiseModel, policy: &ConditionPolicy, floor: f64) -> Result<f64> {
    match file.printed_decimals {
        Some(d) => Ok(sensitivity_tolerance(&file.spec, file.order, noise, policy, d)?.max(floor)),
        None => Ok(floor),
    }
}

/// Evaluates every residual of `file` under `noise` against `tolerance`.
pub fn check(file: &SpecFile, noise: &NoiseModel, tolerance: f64, policy: &ConditionPolicy) -> Result<CheckReport> {
    let label = file.label().to_string();
    if file.bath == Bath::Quantum {
        return Ok(CheckReport {
            label,
            order: file.order,
            noise: *noise,
            rows: vec![],
            status: Status::Skipped,
            skip_reason: Some(QUANTUM_SKIP.into()),
        });
    }
    let r = evaluate_conditions(&file.spec, file.order, noise, Reduction::Full, policy)?;
    let rows: Vec<CheckRow> = r
        .entries
        .iter()
        .map(|e| CheckRow {
            name: e.name.clone(),
            value: e.value,
            tolerance,
            status: if e.value.abs() <= tolerance { Status::Pass } else { Status::Fail },
        })
        .collect();
    let status = if rows.iter().all(|r| r.status == Status::Pass) { Status::Pass } else { Status::Fail };
    Ok(CheckReport { label, order: file.order, noise: *noise, rows, status, skip_reason: None })
}

pub fn describe_noise(n: &NoiseModel) -> String {
    let mut s = format!("eta_mean={:?} var_z={:?} var_x={:?}", n.eta_mean, n.var_z, n.var_x);
    if let Some(tc) = n.correlation_time {
        let _ = write!(s, " tau_c={tc:?}");
    }
    s
}

pub fn render_check(r: &CheckReport, timestamp: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(ts) = timestamp {
        let _ = writeln!(s, "# generated {ts}");
    }
    let _ = writeln!(s, "spec: {}", r.label);
    let _ = writeln!(s, "order: {}", r.order);
    let _ = writeln!(s, "noise: {}", describe_noise(&r.noise));
    if let Some(why) = &r.skip_reason {
        let _ = writeln!(s, "overall: SKIPPED ({why})");
        return s;
    }
    let _ = writeln!(s, "{:<12} {:>24} {:>10}  status", "residual", "value", "tolerance");
    for row in &r.rows {
        let _ = writeln!(s, "{:<12} {:>24.15e} {:>10.2e}  {}", row.name, row.value, row.tolerance, row.status.as_str());
    }
    let failed = r.rows.iter().filter(|x| x.status == Status::Fail).count();
    let _ = writeln!(s, "overall: {} ({} residuals, {} failed)", r.status.as_str(), r.rows.len(), failed);
    s
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub name: String,
    pub report: CheckReport,
    /// Reference pulse; its failure is expected and not counted.
    pub baseline: bool,
    pub seconds: f64,
}

/// Checks every corpus entry against its own noise kind and sensitivity tolerance.
pub fn run_tables(entries: &[(String, SpecFile)], policy: &ConditionPolicy, floor: f64) -> Result<Vec<TableRow>> {
    entries
        .iter()
        .map(|(name, file)| {
            let clock = Instant::now();
            let noise = file.noise.unit_model();
            let tol = if file.bath == Bath::Quantum { floor } else { tolerance_for(file, &noise, policy, floor)? };
            let report = check(file, &noise, tol, policy)?;
            Ok(TableRow { name: name.clone(), report, baseline: file.baseline, seconds: clock.elapsed().as_secs_f64() })
        })
        .collect()
}

/// True when no published entry failed.
pub fn tables_passed(rows: &[TableRow]) -> bool {
    rows.iter().all(|r| r.baseline || r.report.passed())
}

pub fn render_tables(rows: &[TableRow], timestamp: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(ts) = timestamp {
        let _ = writeln!(s, "# generated {ts}");
    }
    let _ = writeln!(s, "{:<26} {:>5} {:>9} {:>4} {:>10} {:>10}  status", "entry", "order", "noise", "n", "max|r|", "tolerance");
    for row in rows {
        let r = &row.report;
        let noise = if r.noise.is_general() { "general" } else { "dephasing" };
        if row.baseline {
            let _ = writeln!(
                s,
                "{:<26} {:>5} {:>9} {:>4} {:>10.2e} {:>10.2e}  BASELINE {} (expected)",
                row.name,
                r.order,
                noise,
                r.rows.len(),
                r.max_abs(),
                r.tolerance(),
                r.status.as_str()
            );
            continue;
        }
        let detail = r.skip_reason.as_deref().map(|w| format!(" ({w})")).unwrap_or_default();
        if r.status == Status::Skipped {
            let _ = writeln!(s, "{:<26} {:>5} {:>9} {:>4} {:>10} {:>10}  SKIPPED{detail}", row.name, r.order, noise, "-", "-", "-");
        } else {
            let _ = writeln!(
                s,
                "{:<26} {:>5} {:>9} {:>4} {:>10.2e} {:>10.2e}  {}",
                row.name,
                r.order,
                noise,
                r.rows.len(),
                r.max_abs(),
                r.tolerance(),
                r.status.as_str()
            );
        }
    }
    let count = |st: Status| rows.iter().filter(|r| !r.baseline && r.report.status == st).count();
    let _ = writeln!(
        s,
        "summary: {} passed, {} failed, {} skipped, {} baseline",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Skipped),
        rows.iter().filter(|r| r.baseline).count()
    );
    s
}
