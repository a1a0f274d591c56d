//! Second-order split-step integrator, one independent `y` problem per mode.
//!
//! Each step is `K(dt/2) V(t + dt/2) K(dt/2)` where `K` is the `p_y^2 / 2m`
//! propagator (diagonal in `y`-Fourier space) and `V` the multiplicative
//! `(hbar kappa_j - q A_x(y, t) / c)^2 / 2m - q E_y(t) y` term sampled at the
//! step midpoint. Consecutive kinetic half steps are fused.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, BOUNDARY_CELLS, BOUNDARY_MASS_LIMIT};
use crate::spectral::{cis, plans, FftPair};
use crate::units::PhysicsConfig;
use crate::wavefunction::{ModeStack, Wavefunction};

use super::hamiltonian::{mode_potential, FieldSnapshot};
use super::protocol::DriveProtocol;

/// Allowed `|norm(t) - norm(0)| / norm(0)`.
pub const NORM_DRIFT_LIMIT: f64 = 1e-10;

/// Modes whose share of the norm is below this are dropped before stepping.
pub const MODE_POWER_FLOOR: f64 = 1e-26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    /// Spacing of recorded samples (rounded to whole steps).
    pub sample_interval: f64,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { sample_interval: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub rx: f64,
    pub ry: f64,
    pub norm: f64,
    pub mean_y: f64,
    /// Angle of `<exp(2 pi i x / l)>`; absent for states uniform in `x`.
    pub x_angle: Option<f64>,
    /// `<H_phi(t)>`: the mechanical kinetic energy, without the `-q E_y y`
    /// term.
    pub kinetic_energy: f64,
    /// `<H(t)>` including `-q E_y y`.
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRecord {
    #[serde(skip)]
    pub final_state: Wavefunction,
    pub samples: Vec<TimeSample>,
    pub steps: usize,
    pub dt: f64,
    pub active_modes: usize,
    pub max_norm_drift: f64,
    /// `integral <H_phi(t)> dt` by the trapezoid rule over the samples.
    pub kinetic_action: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

struct Context<'a> {
    cfg: &'a PhysicsConfig,
    protocol: &'a DriveProtocol,
    grid: CylinderGrid,
    dt: f64,
    fft: FftPair,
    ys: Vec<f64>,
    kinetic: Vec<f64>,
    half_kick: Vec<Complex64>,
    full_kick: Vec<Complex64>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a PhysicsConfig, protocol: &'a DriveProtocol, grid: CylinderGrid, dt: f64) -> Self {
        let ky = grid.y_wavenumbers();
        let ny = grid.ny as f64;
        let kinetic: Vec<f64> = ky.iter().map(|k| (cfg.hbar * k).powi(2) / (2.0 * cfg.m)).collect();
        let half_kick = kinetic.iter().map(|e| unit(cis(-e * dt / (2.0 * cfg.hbar))) / ny).collect();
        let full_kick = kinetic.iter().map(|e| unit(cis(-e * dt / cfg.hbar)) / ny).collect();
        Self {
            cfg,
            protocol,
            grid,
            dt,
            fft: plans(grid.ny),
            ys: (0..grid.ny).map(|k| grid.y(k)).collect(),
            kinetic,
            half_kick,
            full_kick,
        }
    }
}

/// `z / |z|`; trims the rounding bias of `cis` that a fixed kernel would
/// otherwise compound every step.
fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

struct ModeWorker {
    slot: usize,
    kappa: f64,
    profile: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

#[derive(Default, Clone, Copy)]
struct ModeObservables {
    norm: f64,
    y_moment: f64,
    edge: f64,
    kinetic: f64,
}

impl ModeWorker {
    fn advance(&mut self, ctx: &Context<'_>, t0: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        let cfg = ctx.cfg;
        let dt = ctx.dt;
        let buf = &mut self.buf;
        buf.copy_from_slice(&self.profile);
        ctx.fft.forward(buf, &mut self.scratch);
        buf.iter_mut().zip(&ctx.half_kick).for_each(|(v, k)| *v *= k);
        let pi0 = cfg.hbar * self.kappa;
        let by = cfg.q * cfg.b / cfg.c;
        let inv_2m = 1.0 / (2.0 * cfg.m);
        let scale = -dt / cfg.hbar;
        for s in 0..steps {
            ctx.fft.inverse(buf, &mut self.scratch);
            let snap = ctx.protocol.snapshot(cfg, t0 + (s as f64 + 0.5) * dt);
            let shift = pi0 - cfg.q * snap.phi / (cfg.l * cfg.c);
            let qe = cfg.q * snap.e_y;
            for (v, &y) in buf.iter_mut().zip(&ctx.ys) {
                let pix = shift + by * y;
                *v *= cis(scale * (pix * pix * inv_2m - qe * y));
            }
            ctx.fft.forward(buf, &mut self.scratch);
            let kick = if s + 1 == steps { &ctx.half_kick } else { &ctx.full_kick };
            buf.iter_mut().zip(kick).for_each(|(v, k)| *v *= k);
        }
        ctx.fft.inverse(buf, &mut self.scratch);
        self.profile.copy_from_slice(buf);
    }

    fn observe(&mut self, ctx: &Context<'_>, snap: &FieldSnapshot) -> ModeObservables {
        let dy = ctx.grid.dy();
        let ny = ctx.grid.ny;
        let no_field = FieldSnapshot { phi: snap.phi, e_y: 0.0 };
        let mut obs = ModeObservables::default();
        for (k, (v, &y)) in self.profile.iter().zip(&ctx.ys).enumerate() {
            let p = v.norm_sqr();
            obs.norm += p;
            obs.y_moment += p * y;
            obs.kinetic += p * mode_potential(ctx.cfg, self.kappa, &no_field, y);
            if k < BOUNDARY_CELLS || k >= ny - BOUNDARY_CELLS {
                obs.edge += p;
            }
        }
        self.buf.copy_from_slice(&self.profile);
        ctx.fft.forward(&mut self.buf, &mut self.scratch);
        let py: f64 = self.buf.iter().zip(&ctx.kinetic).map(|(v, e)| v.norm_sqr() * e).sum();
        obs.kinetic += py / ny as f64;
        obs.norm *= dy;
        obs.y_moment *= dy;
        obs.edge *= dy;
        obs.kinetic *= dy;
        obs
    }
}

fn assemble(grid: CylinderGrid, workers: &[ModeWorker]) -> Wavefunction {
    let mut modes = ModeStack::zeros(grid, 0.0);
    for w in workers {
        modes.profile_mut(w.slot).copy_from_slice(&w.profile);
    }
    modes.to_wavefunction()
}

/// Evolves a single-valued state under the protocol with default options.
pub fn evolve_tdse(psi0: &Wavefunction, protocol: &DriveProtocol, cfg: &PhysicsConfig) -> Result<EvolutionRecord> {
    evolve_tdse_with(psi0, protocol, cfg, &EvolutionOptions::default())
}

pub fn evolve_tdse_with(
    psi0: &Wavefunction,
    protocol: &DriveProtocol,
    cfg: &PhysicsConfig,
    options: &EvolutionOptions,
) -> Result<EvolutionRecord> {
    let started = Instant::now();
    cfg.validate()?;
    protocol.validate(cfg)?;
    psi0.require_single_valued()?;
    psi0.check_truncation("initial state")?;
    let grid = *psi0.grid();
    let (steps, dt) = protocol.steps();
    let ctx = Context::new(cfg, protocol, grid, dt);

    let modes = psi0.to_modes();
    let total = modes.norm_sqr();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateState);
    }
    let mut workers: Vec<ModeWorker> = (0..grid.nx)
        .filter(|&slot| modes.mode_power(slot) > MODE_POWER_FLOOR * total)
        .map(|slot| ModeWorker {
            slot,
            kappa: cfg.kappa(grid.mode_index(slot), 0.0),
            profile: modes.profile(slot).to_vec(),
            buf: vec![Complex64::new(0.0, 0.0); grid.ny],
            scratch: ctx.fft.scratch(),
        })
        .collect();

    let every = ((options.sample_interval / dt).round() as usize).clamp(1, steps);
    let mut samples = Vec::with_capacity(steps / every + 2);
    let mut max_drift: f64 = 0.0;

    let mut record = |t: f64, workers: &mut [ModeWorker], samples: &mut Vec<TimeSample>| -> Result<()> {
        let snap = protocol.snapshot(cfg, t);
        let obs: Vec<ModeObservables> = workers.iter_mut().map(|w| w.observe(&ctx, &snap)).collect();
        let norm: f64 = obs.iter().map(|o| o.norm).sum();
        let edge: f64 = obs.iter().map(|o| o.edge).sum::<f64>() / norm;
        if !(edge < BOUNDARY_MASS_LIMIT) {
            return Err(Error::Truncation {
                mass: edge,
                limit: BOUNDARY_MASS_LIMIT,
                context: format!("evolve_tdse at t = {t}"),
            });
        }
        max_drift = max_drift.max((norm - total).abs() / total);
        let r = protocol.displacement(cfg, t);
        let x_angle = if workers.len() > 1 { assemble(grid, workers).x_centroid_angle() } else { None };
        let mean_y = obs.iter().map(|o| o.y_moment).sum::<f64>() / norm;
        let kinetic_energy = obs.iter().map(|o| o.kinetic).sum::<f64>() / norm;
        samples.push(TimeSample {
            t,
            rx: r.rx,
            ry: r.ry,
            norm: norm.sqrt(),
            mean_y,
            x_angle,
            kinetic_energy,
            energy: kinetic_energy - cfg.q * snap.e_y * mean_y,
        });
        Ok(())
    };

    record(0.0, &mut workers, &mut samples)?;
    let mut done = 0;
    while done < steps {
        let chunk = every.min(steps - done);
        let t0 = done as f64 * dt;
        if workers.len() > 1 {
            workers.par_iter_mut().for_each(|w| w.advance(&ctx, t0, chunk));
        } else {
            workers.iter_mut().for_each(|w| w.advance(&ctx, t0, chunk));
        }
        done += chunk;
        let t = if done == steps { protocol.duration } else { done as f64 * dt };
        record(t, &mut workers, &mut samples)?;
    }

    let trapezoid = |f: fn(&TimeSample) -> f64| -> f64 {
        samples.windows(2).map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t)).sum()
    };
    let kinetic_action = trapezoid(|s| s.kinetic_energy);
    if max_drift > NORM_DRIFT_LIMIT {
        log::warn!("norm drift {max_drift:e} exceeds {NORM_DRIFT_LIMIT:e}");
    }
    Ok(EvolutionRecord {
        final_state: assemble(grid, &workers),
        samples,
        steps,
        dt,
        active_modes: workers.len(),
        max_norm_drift: max_drift,
        kinetic_action,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Differences between final states at `dt`, `dt/2` and `dt/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepHalvingReport {
    pub dt: f64,
    /// `||psi(dt) - psi(dt/2)||`.
    pub difference: f64,
    /// `||psi(dt/2) - psi(dt/4)||`.
    pub refined_difference: f64,
}

impl StepHalvingReport {
    /// Observed error ratio; about 4 for a second-order scheme.
    pub fn ratio(&self) -> f64 {
        self.difference / self.refined_difference
    }

    pub fn require(&self, tolerance: f64) -> Result<()> {
        if self.difference <= tolerance {
            Ok(())
        } else {
            Err(Error::StepTooLarge { difference: self.difference, tolerance })
        }
    }
}

pub fn step_halving(psi0: &Wavefunction, protocol: &DriveProtocol, cfg: &PhysicsConfig) -> Result<StepHalvingReport> {
    let options = EvolutionOptions { sample_interval: protocol.duration };
    let run = |dt: f64| evolve_tdse_with(psi0, &protocol.with_dt(dt), cfg, &options).map(|r| r.final_state);
    let coarse = run(protocol.dt)?;
    let half = run(protocol.dt / 2.0)?;
    let quarter = run(protocol.dt / 4.0)?;
    Ok(StepHalvingReport {
        dt: protocol.dt,
        difference: coarse.distance(&half)?,
        refined_difference: half.distance(&quarter)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenstates::{energy, landau_eigenstate, oscillator_profile};
    use crate::magtrans::PathPolyline;
    use crate::propagator::protocol::{Ramp, Waveform};
    use crate::wavefunction::inner_product;

    fn reference() -> (PhysicsConfig, CylinderGrid) {
        let cfg = PhysicsConfig::reference();
        (cfg, CylinderGrid::new(16, 256, -16.0, 16.0, cfg.l).unwrap())
    }

    #[test]
    fn stationary_state_only_rotates() {
        let (cfg, grid) = reference();
        let cfg = cfg.with_phi0(0.7);
        for (n, j) in [(0, 0), (2, 3)] {
            let psi = landau_eigenstate(&cfg, &grid, n, j).unwrap();
            let t = 3.0;
            let rec = evolve_tdse(&psi, &DriveProtocol::idle(t, 1e-3), &cfg).unwrap();
            let ip = inner_product(&psi, &rec.final_state).unwrap();
            assert!(ip.norm() > 1.0 - 1e-10);
            let expect = crate::wrap_phase(-energy(&cfg, n) * t / cfg.hbar);
            assert!((crate::wrap_phase(ip.arg() - expect)).abs() < 1e-5 * (n as f64 + 1.0));
            assert!(rec.max_norm_drift < NORM_DRIFT_LIMIT);
            assert_eq!(rec.active_modes, 1);
        }
    }

    #[test]
    fn output_stays_single_valued() {
        let (cfg, grid) = reference();
        let psi = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        let path = PathPolyline::from_points(&[(0.0, 0.0), (0.0, 0.37), (1.0, 0.0)]).unwrap();
        let p = DriveProtocol::along_path(path, 4.0, 1e-3, Ramp::default());
        let rec = evolve_tdse(&psi, &p, &cfg).unwrap();
        assert!(rec.final_state.is_single_valued());
    }

    #[test]
    fn rejects_quasi_periodic_input() {
        let (cfg, grid) = reference();
        let psi = crate::multiply_phase_linear_x(&landau_eigenstate(&cfg, &grid, 0, 0).unwrap(), 0.5);
        assert!(matches!(evolve_tdse(&psi, &DriveProtocol::idle(1.0, 1e-3), &cfg), Err(Error::NotSingleValued(_))));
    }

    #[test]
    fn mode_decoupling() {
        let (cfg, grid) = reference();
        let a = landau_eigenstate(&cfg, &grid, 0, 1).unwrap();
        let b = Wavefunction::from_fn(grid, 0.0, |x, y| {
            cis(-2.0 * x) * Complex64::new(oscillator_profile(1, 1.5, 1.0, y), 0.0)
        })
        .normalized()
        .unwrap();
        let mut sum = a.clone();
        sum.add_scaled(Complex64::new(0.6, -0.3), &b).unwrap();
        let p = DriveProtocol::fields(
            Waveform::Sinusoid { amplitude: 0.2, angular_frequency: 0.7, phase: 0.0 },
            Waveform::Constant { value: 0.15 },
            3.0,
            1e-3,
        );
        let ea = evolve_tdse(&a, &p, &cfg).unwrap().final_state;
        let eb = evolve_tdse(&b, &p, &cfg).unwrap().final_state;
        let es = evolve_tdse(&sum, &p, &cfg).unwrap().final_state;
        let mut expect = ea;
        expect.add_scaled(Complex64::new(0.6, -0.3), &eb).unwrap();
        assert!(es.distance(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn truncation_violation_is_reported() {
        let cfg = PhysicsConfig::reference();
        let grid = CylinderGrid::new(16, 64, -6.0, 6.0, cfg.l).unwrap();
        let psi = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        // strong E_y pushes the center by q E / (m omega^2) = 5
        let p = DriveProtocol::fields(Waveform::Zero, Waveform::Constant { value: 5.0 }, 6.0, 1e-3);
        assert!(matches!(evolve_tdse(&psi, &p, &cfg), Err(Error::Truncation { .. })));
    }

    #[test]
    fn second_order_convergence() {
        let (cfg, grid) = reference();
        let psi = landau_eigenstate(&cfg, &grid, 1, 0).unwrap();
        let p = DriveProtocol::fields(
            Waveform::Sinusoid { amplitude: 0.1, angular_frequency: 0.9, phase: 0.3 },
            Waveform::Sinusoid { amplitude: 0.3, angular_frequency: 1.4, phase: 0.0 },
            2.0,
            0.01,
        );
        let report = step_halving(&psi, &p, &cfg).unwrap();
        assert!((3.0..=5.0).contains(&report.ratio()), "ratio {}", report.ratio());
        assert!(matches!(report.require(1e-12), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn drift_kinetic_energy_is_recorded() {
        let (cfg, _) = reference();
        let grid = CylinderGrid::new(8, 128, -10.0, 10.0, cfg.l).unwrap();
        let psi = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        let path = PathPolyline::straight(crate::Displacement::new(cfg.l, 0.0)).unwrap();
        let t = 80.0;
        let p = DriveProtocol::along_path(path, t, 1.0 / 256.0, Ramp::default());
        let rec = evolve_tdse(&psi, &p, &cfg).unwrap();
        let excess = (rec.kinetic_action - energy(&cfg, 0) * t) / cfg.hbar;
        let drift = p.drift_kinetic_phase(&cfg);
        assert!((excess - drift).abs() < 0.05 * drift, "{excess} vs {drift}");
        assert_eq!(rec.samples.first().unwrap().t, 0.0);
        assert_eq!(rec.samples.last().unwrap().t, t);
    }
}
