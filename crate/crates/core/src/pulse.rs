//! Pulse families and their control fields, in units where the pulse
//! duration is 1.

use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Amplitude modulation with piecewise-constant amplitude `+-v0` about the y axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAm {
    pub theta: f64,
    pub amplitude: f64,
    /// Sorted switching instants in `(0, 1)`.
    pub instants: Vec<f64>,
    /// One sign per segment, `instants.len() + 1` entries.
    pub signs: Vec<i8>,
}

/// Smooth amplitude modulation about the y axis:
/// `v(t) = theta/2 + (a - theta/2) cos 2 pi t + (b - a) cos 4 pi t - b cos 6 pi t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousAm {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
}

/// Frequency modulation `v = V0 f(t) (cos Omega, sin Omega, 0)` with a Fourier
/// phase. Coefficient `k` multiplies `sin(2 pi n t)` for odd `k = 2n - 1` and
/// `cos(2 pi n t) - 1` for even `k = 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FmPulse {
    pub theta: f64,
    pub amplitude: f64,
    /// `(index, value)` pairs sorted by index, indices from 1.
    pub coefficients: Vec<(usize, f64)>,
    /// Envelope switching time; `None` is a rectangular envelope.
    pub switching_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

/// Concatenation of unit-duration FM segments built from one base pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub base: FmPulse,
    pub pattern: Vec<Orientation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseSpec {
    PiecewiseAm(PiecewiseAm),
    ContinuousAm(ContinuousAm),
    Fm(FmPulse),
    Composite(Composite),
}

/// Control vector at one instant, with the FM phase and envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub v: Vec3<f64>,
    pub omega: f64,
    pub envelope: f64,
}

/// A time-dependent control field `v(t)` on `[0, duration]`.
pub trait ControlField: Sync {
    fn duration(&self) -> f64;
    fn control(&self, t: f64) -> Vec3<f64>;
    /// Interior points where the field or its low derivatives jump.
    fn breakpoints(&self) -> Vec<f64>;
}

impl PiecewiseAm {
    /// Symmetric five-segment pulse with sign pattern `(+,-,+,-,+)`.
    pub fn symmetric(theta: f64, tau1: f64, tau2: f64, amplitude: f64) -> Self {
        Self {
            theta,
            amplitude,
            instants: vec![tau1, tau2, 1.0 - tau2, 1.0 - tau1],
            signs: vec![1, -1, 1, -1, 1],
        }
    }

    /// Constant-amplitude pulse of total angle `theta`.
    pub fn unshaped(theta: f64) -> Self {
        Self { theta, amplitude: theta / 2.0, instants: vec![], signs: vec![1] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.signs.len() != self.instants.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} switching instants need {} signs, got {}",
                self.instants.len(),
                self.instants.len() + 1,
                self.signs.len()
            )));
        }
        if self.signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::InvalidParameter("segment signs must be +1 or -1".into()));
        }
        let mut prev = 0.0;
        for &t in &self.instants {
            if !(t > prev && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "switching instants must increase strictly inside (0, 1): {:?}",
                    self.instants
                )));
            }
            prev = t;
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Segments as `(start, end, rate)` with `rate = d psi / dt = 2 s v0`.
    pub fn segments(&self) -> Vec<(f64, f64, f64)> {
        let mut edges = Vec::with_capacity(self.instants.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&self.instants);
        edges.push(1.0);
        edges
            .windows(2)
            .zip(&self.signs)
            .map(|(w, &s)| (w[0], w[1], 2.0 * s as f64 * self.amplitude))
            .collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.instants.partition_point(|&x| x <= t);
        self.signs[k] as f64 * self.amplitude
    }

    pub fn psi(&self, t: f64) -> f64 {
        let mut psi = 0.0;
        for (a, b, rate) in self.segments() {
            if t <= a {
                break;
            }
            psi += rate * (t.min(b) - a);
        }
        psi
    }

    pub fn reversed(&self) -> Self {
        let mut instants: Vec<f64> = self.instants.iter().map(|t| 1.0 - t).collect();
        instants.reverse();
        let mut signs = self.signs.clone();
        signs.reverse();
        Self { instants, signs, ..self.clone() }
    }
}

impl ContinuousAm {
    fn c(&self) -> [f64; 3] {
        [self.a - self.theta / 2.0, self.b - self.a, -self.b]
    }

    pub fn value(&self, t: f64) -> f64 {
        let c = self.c();
        self.theta / 2.0 + (1..=3).map(|n| c[n - 1] * (TAU * n as f64 * t).cos()).sum::<f64>()
    }

    pub fn psi(&self, t: f64) -> f64 {
        let c = self.c();
        self.theta * t + (1..=3).map(|n| c[n - 1] * (TAU * n as f64 * t).sin() / (PI * n as f64)).sum::<f64>()
    }

    /// Largest `|v(t)|`, from a dense scan refined by golden-section search.
    pub fn peak_amplitude(&self) -> f64 {
        let n = 2000;
        let (mut best_t, mut best) = (0.0, 0.0f64);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let v = self.value(t).abs();
            if v > best {
                best = v;
                best_t = t;
            }
        }
        let (mut a, mut b) = ((best_t - 1.0 / n as f64).max(0.0), (best_t + 1.0 / n as f64).min(1.0));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.value(c).abs() > self.value(d).abs() {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(self.value(0.5 * (a + b)).abs())
    }
}

/// Fourier phase `Omega(t)` for `(index, value)` coefficients.
pub fn phase(coefficients: &[(usize, f64)], t: f64) -> f64 {
    let nmax = coefficients.iter().map(|(k, _)| k.div_ceil(2)).max().unwrap_or(0);
    if nmax == 0 {
        return 0.0;
    }
    let (s1, c1) = (TAU * t).sin_cos();
    let mut sn = [0.0; 16];
    let mut cn = [0.0; 16];
    let (mut s, mut c) = (0.0, 1.0);
    let use_table = nmax < 16;
    if use_table {
        for n in 1..=nmax {
            let s_next = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = s_next;
            sn[n] = s;
            cn[n] = c;
        }
    }
    coefficients
        .iter()
        .map(|&(k, b)| {
            let n = k.div_ceil(2);
            let (s, c) = if use_table { (sn[n], cn[n]) } else { (TAU * n as f64 * t).sin_cos() };
            if k % 2 == 1 {
                b * s
            } else {
                b * (c - 1.0)
            }
        })
        .sum()
}

/// Envelope rising as `sin^2` over `[0, ts)`, flat, and falling symmetrically.
pub fn envelope(t: f64, switching_time: Option<f64>) -> f64 {
    let Some(ts) = switching_time else { return 1.0 };
    let rise = |u: f64| (PI * u / (2.0 * ts)).sin().powi(2);
    if t < ts {
        rise(t.max(0.0))
    } else if t <= 1.0 - ts {
        1.0
    } else {
        1.0 - rise((t - (1.0 - ts)).min(ts))
    }
}

impl FmPulse {
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0;
        for &(k, b) in &self.coefficients {
            if k == 0 || k <= prev {
                return Err(Error::InvalidParameter(
                    "coefficient indices must start at 1 and increase strictly".into(),
                ));
            }
            if !b.is_finite() {
                return Err(Error::InvalidParameter(format!("coefficient b{k} is not finite")));
            }
            prev = k;
        }
        if let Some(ts) = self.switching_time {
            if !(ts > 0.0 && ts <= 0.5) {
                return Err(Error::InvalidParameter(format!("switching time {ts} outside (0, 1/2]")));
            }
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("amplitude must be finite".into()));
        }
        Ok(())
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients.iter().find(|c| c.0 == k).map_or(0.0, |c| c.1)
    }

    pub fn phase(&self, t: f64) -> f64 {
        phase(&self.coefficients, t)
    }

    pub fn sample(&self, t: f64) -> ControlSample {
        let omega = self.phase(t);
        let f = envelope(t, self.switching_time);
        let (s, c) = omega.sin_cos();
        ControlSample { v: [self.amplitude * f * c, self.amplitude * f * s, 0.0], omega, envelope: f }
    }

    fn with_parameters(&self, v: &[f64]) -> Self {
        let coefficients = self.coefficients.iter().zip(&v[1..]).map(|(c, b)| (c.0, *b)).collect();
        Self { amplitude: v[0], coefficients, ..self.clone() }
    }

    /// Same pulse run backwards in time: odd (sine) coefficients change sign.
    pub fn reversed(&self) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .map(|&(k, b)| if k % 2 == 1 { (k, -b) } else { (k, b) })
            .collect();
        Self { coefficients, ..self.clone() }
    }

    /// `v(1 - t) = v(t)`: no sine terms.
    pub fn is_symmetric(&self) -> bool {
        self.coefficients.iter().all(|&(k, b)| k % 2 == 0 || b == 0.0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.switching_time {
            Some(ts) if ts < 0.5 => vec![ts, 1.0 - ts],
            Some(_) => vec![0.5],
            None => vec![],
        }
    }
}

impl Composite {
    pub fn segment(&self, i: usize) -> FmPulse {
        match self.pattern[i] {
            Orientation::Forward => self.base.clone(),
            Orientation::Reversed => self.base.reversed(),
        }
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.pattern.len();
        let i = (t.max(0.0).floor() as usize).min(n - 1);
        (i, t - i as f64)
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PulseSpec::PiecewiseAm(p) => p.validate(),
            PulseSpec::ContinuousAm(p) => {
                if p.a.is_finite() && p.b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("continuous AM constants must be finite".into()))
                }
            }
            PulseSpec::Fm(p) => p.validate(),
            PulseSpec::Composite(c) => {
                if c.pattern.is_empty() {
                    return Err(Error::InvalidParameter("composite pattern is empty".into()));
                }
                c.base.validate()
            }
        }
    }

    pub fn theta(&self) -> f64 {
        match self {
            PulseSpec::PiecewiseAm(p) => p.theta,
            PulseSpec::ContinuousAm(p) => p.theta,
            PulseSpec::Fm(p) => p.theta,
            PulseSpec::Composite(c) => c.base.theta * c.pattern.len() as f64,
        }
    }

    /// Peak control amplitude.
    pub fn peak_amplitude(&self) -> f64 {
        match self {
            PulseSpec::PiecewiseAm(p) => p.amplitude.abs(),
            PulseSpec::ContinuousAm(p) => p.peak_amplitude(),
            PulseSpec::Fm(p) => p.amplitude.abs(),
            PulseSpec::Composite(c) => c.base.amplitude.abs(),
        }
    }

    /// Flat list of the printed parameters: instants then amplitude, `(a, b)`,
    /// or amplitude then coefficient values.
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            PulseSpec::PiecewiseAm(p) => p.instants.iter().copied().chain([p.amplitude]).collect(),
            PulseSpec::ContinuousAm(p) => vec![p.a, p.b],
            PulseSpec::Fm(p) => std::iter::once(p.amplitude).chain(p.coefficients.iter().map(|c| c.1)).collect(),
            PulseSpec::Composite(c) => PulseSpec::Fm(c.base.clone()).parameters(),
        }
    }

    /// Inverse of [`PulseSpec::parameters`], keeping every structural field.
    pub fn with_parameters(&self, v: &[f64]) -> Result<PulseSpec> {
        if v.len() != self.parameters().len() {
            return Err(Error::DimensionMismatch { params: v.len(), residuals: self.parameters().len() });
        }
        Ok(match self {
            PulseSpec::PiecewiseAm(p) => {
                let n = p.instants.len();
                PulseSpec::PiecewiseAm(PiecewiseAm { instants: v[..n].to_vec(), amplitude: v[n], ..p.clone() })
            }
            PulseSpec::ContinuousAm(p) => PulseSpec::ContinuousAm(ContinuousAm { a: v[0], b: v[1], ..p.clone() }),
            PulseSpec::Fm(p) => PulseSpec::Fm(p.with_parameters(v)),
            PulseSpec::Composite(c) => {
                PulseSpec::Composite(Composite { base: c.base.with_parameters(v), pattern: c.pattern.clone() })
            }
        })
    }

    pub fn is_amplitude_modulated(&self) -> bool {
        matches!(self, PulseSpec::PiecewiseAm(_) | PulseSpec::ContinuousAm(_))
    }
}

/// Full control sample: the vector plus phase and envelope. AM pulses point
/// along y, reported as phase `pi/2` and unit envelope.
pub fn eval_control(spec: &PulseSpec, t: f64) -> ControlSample {
    match spec {
        PulseSpec::PiecewiseAm(p) => ControlSample { v: [0.0, p.value(t), 0.0], omega: PI / 2.0, envelope: 1.0 },
        PulseSpec::ContinuousAm(p) => ControlSample { v: [0.0, p.value(t), 0.0], omega: PI / 2.0, envelope: 1.0 },
        PulseSpec::Fm(p) => p.sample(t),
        PulseSpec::Composite(c) => {
            let (i, u) = c.locate(t);
            c.segment(i).sample(u)
        }
    }
}

/// Total rotation angle of an AM pulse.
pub fn total_angle_am(spec: &PulseSpec) -> Result<f64> {
    match spec {
        PulseSpec::PiecewiseAm(p) => Ok(p.psi(1.0)),
        PulseSpec::ContinuousAm(p) => Ok(p.psi(1.0)),
        _ => Err(Error::InvalidParameter("total_angle_am needs an amplitude-modulated pulse".into())),
    }
}

impl ControlField for PulseSpec {
    fn duration(&self) -> f64 {
        match self {
            PulseSpec::Composite(c) => c.pattern.len() as f64,
            _ => 1.0,
        }
    }

    fn control(&self, t: f64) -> Vec3<f64> {
        match self {
            PulseSpec::Fm(p) => {
                let omega = p.phase(t);
                let f = p.amplitude * envelope(t, p.switching_time);
                let (s, c) = omega.sin_cos();
                [f * c, f * s, 0.0]
            }
            _ => eval_control(self, t).v,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            PulseSpec::PiecewiseAm(p) => p.instants.clone(),
            PulseSpec::ContinuousAm(_) => vec![],
            PulseSpec::Fm(p) => p.breakpoints(),
            PulseSpec::Composite(c) => {
                let mut out = Vec::new();
                for i in 0..c.pattern.len() {
                    if i > 0 {
                        out.push(i as f64);
                    }
                    out.extend(c.base.breakpoints().into_iter().map(|b| b + i as f64));
                }
                out
            }
        }
    }
}
