use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magtrans::{Displacement, PathPolyline};
use crate::units::PhysicsConfig;

use super::hamiltonian::FieldSnapshot;

/// Default integrator step, `2^-10 / omega` in reference units. Rounding in
/// the transforms adds a norm bias of order `1e-16` per step, so finer
/// defaults trade truncation error for norm drift on long loops.
pub const DEFAULT_DT: f64 = 1.0 / 1024.0;

/// Upper bound on `dt * omega`.
pub const MAX_DT_OMEGA: f64 = 0.01;

/// Scalar function of time with a closed-form running integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Waveform {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * sin(angular_frequency * t + phase)`.
    Sinusoid {
        amplitude: f64,
        angular_frequency: f64,
        phase: f64,
    },
    /// `value` for `t >= start`, zero before.
    Step {
        value: f64,
        start: f64,
    },
    /// Piecewise-linear interpolation of `values` at `t = k * interval`,
    /// held constant past the last sample.
    Samples {
        interval: f64,
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<Waveform>,
    },
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Zero => 0.0,
            Waveform::Constant { value } => *value,
            Waveform::Sinusoid { amplitude, angular_frequency, phase } => {
                amplitude * (angular_frequency * t + phase).sin()
            }
            Waveform::Step { value, start } => {
                if t >= *start {
                    *value
                } else {
                    0.0
                }
            }
            Waveform::Samples { interval, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let pos = (t / interval).max(0.0);
                let k = pos.floor() as usize;
                if k + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let f = pos - k as f64;
                values[k] * (1.0 - f) + values[k + 1] * f
            }
            Waveform::Sum { terms } => terms.iter().map(|w| w.value(t)).sum(),
        }
    }

    /// `integral_0^t value(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            Waveform::Zero => 0.0,
            Waveform::Constant { value } => value * t,
            Waveform::Sinusoid { amplitude, angular_frequency, phase } => {
                if *angular_frequency == 0.0 {
                    amplitude * phase.sin() * t
                } else {
                    amplitude * (phase.cos() - (angular_frequency * t + phase).cos()) / angular_frequency
                }
            }
            Waveform::Step { value, start } => value * (t - start).max(0.0),
            Waveform::Samples { interval, values } => {
                if values.is_empty() || t <= 0.0 {
                    return 0.0;
                }
                let pos = t / interval;
                let mut acc = 0.0;
                let full = pos.floor() as usize;
                for k in 0..full.min(values.len().saturating_sub(1)) {
                    acc += 0.5 * (values[k] + values[k + 1]) * interval;
                }
                if full + 1 < values.len() {
                    let tail = t - full as f64 * interval;
                    acc += 0.5 * (values[full] + self.value(t)) * tail;
                } else {
                    let covered = (values.len() - 1) as f64 * interval;
                    acc += values.last().unwrap() * (t - covered);
                }
                acc
            }
            Waveform::Sum { terms } => terms.iter().map(|w| w.integral(t)).sum(),
        }
    }

    /// Times where the waveform or its slope jumps.
    fn breakpoints(&self, until: f64, out: &mut Vec<f64>) {
        match self {
            Waveform::Step { start, .. } => out.push(*start),
            Waveform::Samples { interval, values } => {
                let last = values.len().saturating_sub(1) as f64 * interval;
                out.extend((1..values.len()).map(|k| k as f64 * interval).take_while(|&t| t <= last.min(until)));
            }
            Waveform::Sum { terms } => terms.iter().for_each(|w| w.breakpoints(until, out)),
            _ => {}
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProtocol(format!("{name}: {msg}")));
        match self {
            Waveform::Zero => Ok(()),
            Waveform::Constant { value } if !value.is_finite() => bad("non-finite value".into()),
            Waveform::Sinusoid { amplitude, angular_frequency, phase }
                if !(amplitude.is_finite() && angular_frequency.is_finite() && phase.is_finite()) =>
            {
                bad("non-finite sinusoid parameter".into())
            }
            Waveform::Step { value, start } if !(value.is_finite() && start.is_finite()) => {
                bad("non-finite step parameter".into())
            }
            Waveform::Samples { interval, values } => {
                if !(interval.is_finite() && *interval > 0.0) {
                    bad(format!("sample interval must be > 0, got {interval}"))
                } else if values.iter().any(|v| !v.is_finite()) {
                    bad("non-finite sample".into())
                } else {
                    Ok(())
                }
            }
            Waveform::Sum { terms } => terms.iter().try_for_each(|w| w.validate(name)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// `sin^2` turn-on and turn-off of the speed.
    #[default]
    Sin2,
    /// Linear turn-on and turn-off (trapezoidal speed).
    Linear,
    /// Constant speed, switched on and off abruptly.
    Sudden,
}

/// Speed profile along each path segment. `fraction` is the share of the
/// segment time spent ramping at each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub shape: RampShape,
    pub fraction: f64,
}

impl Default for Ramp {
    fn default() -> Self {
        Self { shape: RampShape::Sin2, fraction: 0.1 }
    }
}

impl Ramp {
    pub fn sudden() -> Self {
        Self { shape: RampShape::Sudden, fraction: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.shape != RampShape::Sudden && !(self.fraction > 0.0 && self.fraction <= 0.5) {
            return Err(Error::InvalidProtocol(format!("ramp fraction must be in (0, 0.5], got {}", self.fraction)));
        }
        Ok(())
    }

    /// Unnormalized speed `w(u)` and its integral `W(u)` on `u in [0, 1]`.
    fn weight(&self, u: f64) -> (f64, f64) {
        let r = self.fraction;
        let rising = |u: f64| -> (f64, f64) {
            match self.shape {
                RampShape::Sin2 => {
                    let a = PI * u / (2.0 * r);
                    (a.sin().powi(2), u / 2.0 - r / (2.0 * PI) * (PI * u / r).sin())
                }
                RampShape::Linear => (u / r, u * u / (2.0 * r)),
                RampShape::Sudden => (1.0, u),
            }
        };
        if self.shape == RampShape::Sudden {
            return (1.0, u);
        }
        let total = 1.0 - r;
        if u <= r {
            rising(u)
        } else if u >= 1.0 - r {
            let (w, big_w) = rising(1.0 - u);
            (w, total - big_w)
        } else {
            (1.0, rising(r).1 + (u - r))
        }
    }

    /// Fraction of the segment covered at normalized time `u`, and its rate.
    pub fn progress(&self, u: f64) -> (f64, f64) {
        let u = u.clamp(0.0, 1.0);
        let total = if self.shape == RampShape::Sudden { 1.0 } else { 1.0 - self.fraction };
        let (w, big_w) = self.weight(u);
        (big_w / total, w / total)
    }

    /// `integral_0^1 (ds/du)^2 du`, the speed-profile factor of the drift
    /// kinetic energy along one segment.
    pub fn speed_factor(&self) -> f64 {
        let r = self.fraction;
        match self.shape {
            RampShape::Sudden => 1.0,
            RampShape::Sin2 => (1.0 - 2.0 * r + 2.0 * r * 3.0 / 8.0) / (1.0 - r).powi(2),
            RampShape::Linear => (1.0 - 2.0 * r + 2.0 * r / 3.0) / (1.0 - r).powi(2),
        }
    }
}

/// How the guiding-center displacement `R(t)` is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Drive {
    /// `R(t)` follows the polyline; each segment gets time proportional to
    /// its length and the speed is ramped to zero at every vertex.
    Path { path: PathPolyline, ramp: Ramp },
    /// Electric field components; `R` by the drift integrals.
    Fields { e_x: Waveform, e_y: Waveform },
    /// Threading flux sampled uniformly over `[0, T]` (piecewise linear) with
    /// an independent `E_y`. The first sample must equal `phi0`.
    FluxSchedule { flux: Vec<f64>, e_y: Waveform },
}

/// Drive over `[0, duration]` integrated with step `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub duration: f64,
    pub dt: f64,
    pub drive: Drive,
}

impl DriveProtocol {
    pub fn along_path(path: PathPolyline, duration: f64, dt: f64, ramp: Ramp) -> Self {
        Self { duration, dt, drive: Drive::Path { path, ramp } }
    }

    pub fn fields(e_x: Waveform, e_y: Waveform, duration: f64, dt: f64) -> Self {
        Self { duration, dt, drive: Drive::Fields { e_x, e_y } }
    }

    /// No drive at all.
    pub fn idle(duration: f64, dt: f64) -> Self {
        Self::fields(Waveform::Zero, Waveform::Zero, duration, dt)
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..self.clone() }
    }

    pub fn validate(&self, cfg: &PhysicsConfig) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidProtocol(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidProtocol(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt * cfg.omega() > MAX_DT_OMEGA * (1.0 + 1e-12) {
            return Err(Error::InvalidProtocol(format!(
                "dt = {} exceeds {MAX_DT_OMEGA}/omega = {}",
                self.dt,
                MAX_DT_OMEGA / cfg.omega()
            )));
        }
        match &self.drive {
            Drive::Path { ramp, .. } => ramp.validate(),
            Drive::Fields { e_x, e_y } => {
                e_x.validate("e_x")?;
                e_y.validate("e_y")
            }
            Drive::FluxSchedule { flux, e_y } => {
                e_y.validate("e_y")?;
                if flux.len() < 2 {
                    return Err(Error::InvalidProtocol("flux schedule needs at least two samples".into()));
                }
                if flux.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProtocol("non-finite flux sample".into()));
                }
                if (flux[0] - cfg.phi0).abs() > 1e-12 * cfg.phi0.abs().max(1.0) {
                    return Err(Error::InvalidProtocol(format!(
                        "flux schedule starts at {} but phi0 = {}",
                        flux[0], cfg.phi0
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of steps and the step actually used (`duration / steps`).
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.duration / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.duration / n as f64)
    }

    fn path_segment(&self, path: &PathPolyline, t: f64) -> (usize, f64, f64) {
        let total = path.length();
        let mut start = 0.0;
        let segments: Vec<_> = path.segments().collect();
        for (k, (a, b)) in segments.iter().enumerate() {
            let span = self.duration * (*b - *a).norm() / total;
            if t <= start + span || k + 1 == segments.len() {
                return (k, ((t - start) / span).clamp(0.0, 1.0), span);
            }
            start += span;
        }
        unreachable!("path has at least one segment")
    }

    /// Interior times in `(0, duration)` where the drive is not smooth, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.drive {
            Drive::Path { path, ramp } => {
                let total = path.length();
                let mut start = 0.0;
                for (a, b) in path.segments() {
                    let span = self.duration * (b - a).norm() / total;
                    if ramp.shape != RampShape::Sudden {
                        out.push(start + ramp.fraction * span);
                        out.push(start + (1.0 - ramp.fraction) * span);
                    }
                    start += span;
                    out.push(start);
                }
            }
            Drive::Fields { e_x, e_y } => {
                e_x.breakpoints(self.duration, &mut out);
                e_y.breakpoints(self.duration, &mut out);
            }
            Drive::FluxSchedule { flux, e_y } => {
                let interval = self.duration / (flux.len() - 1) as f64;
                out.extend((1..flux.len() - 1).map(|k| k as f64 * interval));
                e_y.breakpoints(self.duration, &mut out);
            }
        }
        out.retain(|&t| t > 0.0 && t < self.duration);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    /// `R(t)` and `dR/dt`, without range checks.
    pub fn kinematics(&self, cfg: &PhysicsConfig, t: f64) -> (Displacement, Displacement) {
        match &self.drive {
            Drive::Path { path, ramp } => {
                if path.vertices().len() < 2 {
                    return (Displacement::ZERO, Displacement::ZERO);
                }
                let (k, u, span) = self.path_segment(path, t);
                let a = path.vertices()[k];
                let b = path.vertices()[k + 1];
                let (s, rate) = ramp.progress(u);
                (a + (b - a) * s, (b - a) * (rate / span))
            }
            Drive::Fields { e_x, e_y } => {
                let f = cfg.c / cfg.b;
                (
                    Displacement::new(f * e_y.integral(t), -f * e_x.integral(t)),
                    Displacement::new(f * e_y.value(t), -f * e_x.value(t)),
                )
            }
            Drive::FluxSchedule { flux, e_y } => {
                let f = cfg.c / cfg.b;
                let interval = self.duration / (flux.len() - 1) as f64;
                let schedule = Waveform::Samples { interval, values: flux.clone() };
                let pos = (t / interval).clamp(0.0, (flux.len() - 1) as f64);
                let k = (pos.floor() as usize).min(flux.len() - 2);
                let dphi = (flux[k + 1] - flux[k]) / interval;
                let scale = 1.0 / (cfg.l * cfg.b);
                (
                    Displacement::new(f * e_y.integral(t), (schedule.value(t) - flux[0]) * scale),
                    Displacement::new(f * e_y.value(t), dphi * scale),
                )
            }
        }
    }

    pub fn displacement(&self, cfg: &PhysicsConfig, t: f64) -> Displacement {
        self.kinematics(cfg, t).0
    }

    /// `(E_x, E_y)` at time `t`.
    pub fn electric_field(&self, cfg: &PhysicsConfig, t: f64) -> (f64, f64) {
        let v = self.kinematics(cfg, t).1;
        let f = cfg.b / cfg.c;
        (-f * v.ry, f * v.rx)
    }

    /// `phi(t) = phi0 + l B R_y(t)`.
    pub fn flux(&self, cfg: &PhysicsConfig, t: f64) -> f64 {
        cfg.phi0 + cfg.l * cfg.b * self.displacement(cfg, t).ry
    }

    pub fn snapshot(&self, cfg: &PhysicsConfig, t: f64) -> FieldSnapshot {
        let (r, v) = self.kinematics(cfg, t);
        FieldSnapshot { phi: cfg.phi0 + cfg.l * cfg.b * r.ry, e_y: cfg.b / cfg.c * v.rx }
    }

    /// Path traced by `R` over `[0, t]` as a polyline. Path drives return
    /// their own vertices; field drives are sampled at `samples` points.
    pub fn traced_path(&self, cfg: &PhysicsConfig, t: f64, samples: usize) -> Result<PathPolyline> {
        let mut vertices = vec![Displacement::ZERO];
        let mut push = |v: Displacement| {
            if *vertices.last().unwrap() != v {
                vertices.push(v);
            }
        };
        match &self.drive {
            Drive::Path { path, .. } => {
                let (k, _, _) = self.path_segment(path, t);
                for v in &path.vertices()[1..=k] {
                    push(*v);
                }
                push(self.displacement(cfg, t));
            }
            _ => {
                let n = samples.max(1);
                for s in 1..=n {
                    push(self.displacement(cfg, t * s as f64 / n as f64));
                }
            }
        }
        PathPolyline::new(vertices)
    }

    /// `(m / 2 hbar) integral |dR/dt|^2 dt`: the leading finite-duration
    /// excess of the measured cyclic phase over its adiabatic limit.
    pub fn drift_kinetic_phase(&self, cfg: &PhysicsConfig) -> f64 {
        let integral = match &self.drive {
            Drive::Path { path, ramp } => {
                let total = path.length();
                path.segments()
                    .map(|(a, b)| {
                        let len = (b - a).norm();
                        let span = self.duration * len / total;
                        len * len / span * ramp.speed_factor()
                    })
                    .sum()
            }
            _ => {
                // composite Simpson on a fine grid
                let n = 20_000;
                let h = self.duration / n as f64;
                (0..=n)
                    .map(|k| {
                        let w = if k == 0 || k == n {
                            1.0
                        } else if k % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        let v = self.kinematics(cfg, k as f64 * h).1;
                        w * (v.rx * v.rx + v.ry * v.ry)
                    })
                    .sum::<f64>()
                    * h
                    / 3.0
            }
        };
        cfg.m * integral / (2.0 * cfg.hbar)
    }
}

/// Guiding-center displacement `R(t)`:
/// `R_x = (c / B) integral E_y`, `R_y = -(c / B) integral E_x`.
pub fn drift_displacement(protocol: &DriveProtocol, cfg: &PhysicsConfig, t: f64) -> Result<Displacement> {
    if !(0.0..=protocol.duration).contains(&t) {
        return Err(Error::TimeOutOfRange { t, duration: protocol.duration });
    }
    Ok(protocol.displacement(cfg, t))
}
