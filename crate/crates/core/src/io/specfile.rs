//! Pulse-spec files: TOML with symbolic angles and sparse coefficient tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use core::f64::consts::{FRAC_PI_2, PI};
use serde::Deserialize;

use crate::conditions::NoiseModel;
use crate::error::{Error, Result};
use crate::pulse::{Composite, ContinuousAm, FmPulse, Orientation, PiecewiseAm, PulseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Dephasing,
    General,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Dephasing => "dephasing",
            NoiseKind::General => "general",
        }
    }

    /// Unit-moment noise model of this kind.
    pub fn unit_model(self) -> NoiseModel {
        match self {
            NoiseKind::Dephasing => NoiseModel::unit_dephasing(),
            NoiseKind::General => NoiseModel::unit_general(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bath {
    Classical,
    Quantum,
}

/// A pulse together with the conditions it was built for and its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub name: Option<String>,
    pub spec: PulseSpec,
    pub order: u8,
    pub noise: NoiseKind,
    /// Physical duration used only when exporting waveforms.
    pub duration: f64,
    pub symmetric: bool,
    /// Uncompensated reference pulse, expected to fail its conditions.
    pub baseline: bool,
    pub bath: Bath,
    /// Decimal places of the printed parameters, when they were rounded.
    pub printed_decimals: Option<u32>,
    pub provenance: Option<String>,
}

impl SpecFile {
    pub fn new(spec: PulseSpec, order: u8, noise: NoiseKind) -> Self {
        Self {
            name: None,
            spec,
            order,
            noise,
            duration: 1.0,
            symmetric: false,
            baseline: false,
            bath: Bath::Classical,
            printed_decimals: None,
            provenance: None,
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("<unnamed>")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    family: String,
    order: u8,
    noise: Option<String>,
    theta: toml::Value,
    duration: Option<f64>,
    amplitude: Option<f64>,
    instants: Option<Vec<f64>>,
    signs: Option<Vec<i64>>,
    a: Option<f64>,
    b: Option<f64>,
    switching_time: Option<f64>,
    pattern: Option<Vec<String>>,
    symmetric: Option<bool>,
    baseline: Option<bool>,
    bath: Option<String>,
    printed_decimals: Option<u32>,
    provenance: Option<String>,
    coefficients: Option<BTreeMap<String, f64>>,
}

/// Parses `pi`, `pi/2`, `k*pi`, `pi/k` or a plain number.
pub fn parse_angle(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (t.clone(), 1.0),
    };
    let factor = match num.as_str() {
        "pi" => 1.0,
        "-pi" => -1.0,
        n => n.strip_suffix("*pi").or_else(|| n.strip_suffix("pi"))?.parse::<f64>().ok()?,
    };
    Some(factor * PI / den)
}

fn format_angle(theta: f64) -> String {
    for (v, s) in [(PI, "pi"), (FRAC_PI_2, "pi/2"), (2.0 * PI, "2pi"), (PI / 4.0, "pi/4")] {
        if theta == v {
            return format!("\"{s}\"");
        }
    }
    format!("{theta:?}")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn parse_error(text: &str, key: &str, message: String) -> Error {
    Error::Parse { line: key_line(text, key), message }
}

fn coefficient_index(key: &str) -> Option<usize> {
    key.strip_prefix('b')?.parse().ok().filter(|&k| k > 0)
}

/// Parses a spec file; errors carry the offending line where known.
pub fn parse(text: &str) -> Result<SpecFile> {
    let raw: Raw = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| parse_error(text, "family", format!("missing key `{key}`")));
    let theta = match &raw.theta {
        toml::Value::String(s) => parse_angle(s),
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
    .ok_or_else(|| parse_error(text, "theta", format!("cannot read angle {}", raw.theta)))?;
    let noise = match raw.noise.as_deref().unwrap_or("dephasing") {
        "dephasing" => NoiseKind::Dephasing,
        "general" => NoiseKind::General,
        other => return Err(parse_error(text, "noise", format!("unknown noise kind `{other}`"))),
    };
    let bath = match raw.bath.as_deref().unwrap_or("classical") {
        "classical" => Bath::Classical,
        "quantum" => Bath::Quantum,
        other => return Err(parse_error(text, "bath", format!("unknown bath `{other}`"))),
    };
    let mut coefficients = Vec::new();
    for (k, v) in raw.coefficients.iter().flatten() {
        let idx = coefficient_index(k).ok_or_else(|| parse_error(text, k, format!("bad coefficient key `{k}`")))?;
        coefficients.push((idx, *v));
    }
    coefficients.sort_by_key(|c| c.0);
    let fm = |amplitude: f64| FmPulse { theta, amplitude, coefficients: coefficients.clone(), switching_time: raw.switching_time };
    let spec = match raw.family.as_str() {
        "am-piecewise" => {
            let instants = raw.instants.clone().unwrap_or_default();
            let signs = match &raw.signs {
                Some(s) => s.iter().map(|&x| x as i8).collect(),
                None => (0..=instants.len()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect(),
            };
            PulseSpec::PiecewiseAm(PiecewiseAm { theta, amplitude: need(raw.amplitude, "amplitude")?, instants, signs })
        }
        "am-continuous" => PulseSpec::ContinuousAm(ContinuousAm { theta, a: need(raw.a, "a")?, b: need(raw.b, "b")? }),
        "fm" => PulseSpec::Fm(fm(need(raw.amplitude, "amplitude")?)),
        "fm-composite" => {
            let names = raw.pattern.clone().unwrap_or_else(|| vec!["forward".into(), "reversed".into()]);
            let mut pattern = Vec::new();
            for n in &names {
                pattern.push(match n.as_str() {
                    "forward" => Orientation::Forward,
                    "reversed" => Orientation::Reversed,
                    other => return Err(parse_error(text, "pattern", format!("unknown orientation `{other}`"))),
                });
            }
            PulseSpec::Composite(Composite { base: fm(need(raw.amplitude, "amplitude")?), pattern })
        }
        other => return Err(parse_error(text, "family", format!("unknown family `{other}`"))),
    };
    spec.validate().map_err(|e| parse_error(text, "family", e.to_string()))?;
    if !(1..=2).contains(&raw.order) {
        return Err(parse_error(text, "order", format!("order must be 1 or 2, got {}", raw.order)));
    }
    let duration = raw.duration.unwrap_or(1.0);
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(parse_error(text, "duration", "duration must be positive".into()));
    }
    Ok(SpecFile {
        name: raw.name,
        spec,
        order: raw.order,
        noise,
        duration,
        symmetric: raw.symmetric.unwrap_or(false),
        baseline: raw.baseline.unwrap_or(false),
        bath,
        printed_decimals: raw.printed_decimals,
        provenance: raw.provenance,
    })
}

pub fn read(path: &Path) -> Result<SpecFile> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

pub fn write(path: &Path, file: &SpecFile) -> Result<()> {
    std::fs::write(path, serialize(file))?;
    Ok(())
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn float_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

/// Writes floats in shortest round-trip form, so `parse(serialize(f)) == f`.
pub fn serialize(f: &SpecFile) -> String {
    let mut s = String::new();
    if let Some(n) = &f.name {
        let _ = writeln!(s, "name = {}", quote(n));
    }
    let family = match &f.spec {
        PulseSpec::PiecewiseAm(_) => "am-piecewise",
        PulseSpec::ContinuousAm(_) => "am-continuous",
        PulseSpec::Fm(_) => "fm",
        PulseSpec::Composite(_) => "fm-composite",
    };
    let theta = match &f.spec {
        PulseSpec::Composite(c) => c.base.theta,
        other => other.theta(),
    };
    let _ = writeln!(s, "family = \"{family}\"");
    let _ = writeln!(s, "order = {}", f.order);
    let _ = writeln!(s, "noise = \"{}\"", f.noise.as_str());
    let _ = writeln!(s, "theta = {}", format_angle(theta));
    let _ = writeln!(s, "duration = {:?}", f.duration);
    let mut coefficients: &[(usize, f64)] = &[];
    match &f.spec {
        PulseSpec::PiecewiseAm(p) => {
            let _ = writeln!(s, "amplitude = {:?}", p.amplitude);
            let _ = writeln!(s, "instants = {}", float_list(&p.instants));
            let signs: Vec<String> = p.signs.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "signs = [{}]", signs.join(", "));
        }
        PulseSpec::ContinuousAm(p) => {
            let _ = writeln!(s, "a = {:?}", p.a);
            let _ = writeln!(s, "b = {:?}", p.b);
        }
        PulseSpec::Fm(p) => {
            let _ = writeln!(s, "amplitude = {:?}", p.amplitude);
            if let Some(ts) = p.switching_time {
                let _ = writeln!(s, "switching_time = {ts:?}");
            }
            coefficients = &p.coefficients;
        }
        PulseSpec::Composite(c) => {
            let _ = writeln!(s, "amplitude = {:?}", c.base.amplitude);
            if let Some(ts) = c.base.switching_time {
                let _ = writeln!(s, "switching_time = {ts:?}");
            }
            let names: Vec<&str> = c
                .pattern
                .iter()
                .map(|o| match o {
                    Orientation::Forward => "\"forward\"",
                    Orientation::Reversed => "\"reversed\"",
                })
                .collect();
            let _ = writeln!(s, "pattern = [{}]", names.join(", "));
            coefficients = &c.base.coefficients;
        }
    }
    if f.symmetric {
        let _ = writeln!(s, "symmetric = true");
    }
    if f.baseline {
        let _ = writeln!(s, "baseline = true");
    }
    let _ = writeln!(
        s,
        "bath = \"{}\"",
        match f.bath {
            Bath::Classical => "classical",
            Bath::Quantum => "quantum",
        }
    );
    if let Some(d) = f.printed_decimals {
        let _ = writeln!(s, "printed_decimals = {d}");
    }
    if let Some(p) = &f.provenance {
        let _ = writeln!(s, "provenance = {}", quote(p));
    }
    if !coefficients.is_empty() {
        let _ = writeln!(s, "\n[coefficients]");
        for (k, b) in coefficients {
            let _ = writeln!(s, "b{k} = {b:?}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("pi/2"), Some(FRAC_PI_2));
        assert_eq!(parse_angle("2pi"), Some(2.0 * PI));
        assert_eq!(parse_angle("1.5"), Some(1.5));
        assert_eq!(parse_angle("tau"), None);
    }

    #[test]
    fn semantic_error_points_at_key() {
        let text = "family = \"fm\"\norder = 1\ntheta = \"pi\"\nnoise = \"pink\"\namplitude = 3.0\n";
        match parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(4)),
            other => panic!("{other:?}"),
        }
    }
}
