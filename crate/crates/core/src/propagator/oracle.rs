//! Exact solution of the driven oscillator each mode reduces to.
//!
//! For `H = p^2 / 2m + V(y, t)` with `V = (m omega^2 / 2) (y - y_c(t))^2 -
//! q E_y(t) y`, the state that starts as the boosted, displaced level
//! `exp(i p0 (y - y0) / hbar) chi_n(y - y0)` stays of that form:
//! `exp(i [p (y - y_cl) + S] / hbar) exp(-i E_n t / hbar) chi_n(y - y_cl)`,
//! where `(y_cl, p)` follows Hamilton's equations and
//! `S = integral (p^2 / 2m - V(y_cl, t)) dt`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigenstates::oscillator_profile;
use crate::error::{Error, Result};
use crate::grid::CylinderGrid;
use crate::spectral::{cis, plans};
use crate::units::PhysicsConfig;
use crate::wavefunction::{ModeStack, Wavefunction};

use super::hamiltonian::mode_potential;
use super::protocol::DriveProtocol;
use super::tdse::MODE_POWER_FLOOR;

/// Largest RK4 step of the classical integration.
const CLASSICAL_STEP: f64 = 1e-3;
/// Highest level tried when recognizing an input state.
const FIT_LEVELS: usize = 40;
/// Required `|<candidate|psi>|^2` for recognition.
const FIT_FIDELITY: f64 = 1.0 - 1e-10;

/// Phase-space point and accumulated action of the classical orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub t: f64,
    pub y: f64,
    pub p: f64,
    pub action: f64,
}

/// Initial data the oracle accepts: level `n` of mode `j`, displaced to `y0`
/// and boosted to momentum `p0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleInput {
    pub j: i64,
    pub n: usize,
    pub y0: f64,
    pub p0: f64,
}

impl OracleInput {
    pub fn state(&self, cfg: &PhysicsConfig, grid: &CylinderGrid) -> Result<Wavefunction> {
        let start = ClassicalState { t: 0.0, y: self.y0, p: self.p0, action: 0.0 };
        let psi = self.build(cfg, grid, &start, Complex64::new(1.0, 0.0))?;
        psi.check_truncation("oracle input")?;
        Ok(psi)
    }

    fn build(
        &self,
        cfg: &PhysicsConfig,
        grid: &CylinderGrid,
        at: &ClassicalState,
        coeff: Complex64,
    ) -> Result<Wavefunction> {
        let slot =
            grid.mode_slot(self.j).ok_or_else(|| Error::OracleInput(format!("mode {} outside the grid", self.j)))?;
        let lb = cfg.magnetic_length();
        let phase = coeff * cis((at.action - cfg.level_energy(self.n) * at.t) / cfg.hbar) * cfg.l.sqrt();
        let mut modes = ModeStack::zeros(*grid, 0.0);
        for (k, v) in modes.profile_mut(slot).iter_mut().enumerate() {
            let y = grid.y(k);
            *v = phase * cis(at.p * (y - at.y) / cfg.hbar) * oscillator_profile(self.n, at.y, lb, y);
        }
        Ok(modes.to_wavefunction())
    }

    /// Recognizes `psi` as `coeff * state()`; returns the input and `coeff`.
    pub fn fit(cfg: &PhysicsConfig, psi: &Wavefunction) -> Result<(Self, Complex64)> {
        psi.require_single_valued()?;
        let grid = *psi.grid();
        let modes = psi.to_modes();
        let total = modes.norm_sqr();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DegenerateState);
        }
        let occupied: Vec<usize> = (0..grid.nx).filter(|&s| modes.mode_power(s) > MODE_POWER_FLOOR * total).collect();
        if occupied.len() != 1 {
            return Err(Error::OracleInput(format!("state occupies {} x modes, expected one", occupied.len())));
        }
        let slot = occupied[0];
        let profile = modes.profile(slot);
        let dy = grid.dy();
        let weight: f64 = profile.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy;
        let y0 = profile.iter().enumerate().map(|(k, v)| v.norm_sqr() * grid.y(k)).sum::<f64>() * dy / weight;

        let fft = plans(grid.ny);
        let mut spec = profile.to_vec();
        fft.forward(&mut spec, &mut fft.scratch());
        let ky = grid.y_wavenumbers();
        let p0 = cfg.hbar * spec.iter().zip(&ky).map(|(v, k)| v.norm_sqr() * k).sum::<f64>()
            / spec.iter().map(|v| v.norm_sqr()).sum::<f64>();

        let j = grid.mode_index(slot);
        let lb = cfg.magnetic_length();
        let norm = weight.sqrt();
        for n in 0..=FIT_LEVELS {
            let overlap: Complex64 = profile
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let y = grid.y(k);
                    cis(-p0 * (y - y0) / cfg.hbar) * oscillator_profile(n, y0, lb, y) * v
                })
                .sum::<Complex64>()
                * dy;
            if overlap.norm_sqr() >= FIT_FIDELITY * weight {
                let coeff = overlap / cfg.l.sqrt();
                debug_assert!((coeff.norm() - norm / cfg.l.sqrt()).abs() < 1e-4 * norm);
                return Ok((Self { j, n, y0, p0 }, coeff));
            }
        }
        Err(Error::OracleInput(format!("mode {j} profile is not a displaced oscillator level with n <= {FIT_LEVELS}")))
    }
}

/// Integrates the classical orbit of mode wavevector `kappa` from `start` to
/// `t_end` with RK4, restarting at every drive breakpoint.
pub fn classical_trajectory(
    cfg: &PhysicsConfig,
    protocol: &DriveProtocol,
    kappa: f64,
    start: ClassicalState,
    t_end: f64,
) -> ClassicalState {
    let mut s = start;
    let stops = protocol.breakpoints().into_iter().filter(|&t| t > start.t && t < t_end).chain([t_end]);
    for stop in stops {
        s = rk4_span(cfg, protocol, kappa, s, stop);
    }
    s
}

fn rk4_span(
    cfg: &PhysicsConfig,
    protocol: &DriveProtocol,
    kappa: f64,
    start: ClassicalState,
    t_end: f64,
) -> ClassicalState {
    let span = t_end - start.t;
    if span <= 0.0 {
        return start;
    }
    let steps = (span / CLASSICAL_STEP).ceil() as usize;
    let h = span / steps as f64;
    // one-sided evaluation keeps jumps at the span ends out of the stencil
    let inside = |t: f64| t.clamp(start.t + 1e-3 * h, t_end - 1e-3 * h);
    let force = |t: f64, y: f64| {
        let snap = protocol.snapshot(cfg, inside(t));
        let pi_x = cfg.hbar * kappa + cfg.q * cfg.b * y / cfg.c - cfg.q * snap.phi / (cfg.l * cfg.c);
        -pi_x * cfg.q * cfg.b / (cfg.m * cfg.c) + cfg.q * snap.e_y
    };
    let lagrangian = |t: f64, y: f64, p: f64| {
        p * p / (2.0 * cfg.m) - mode_potential(cfg, kappa, &protocol.snapshot(cfg, inside(t)), y)
    };
    let mut s = start;
    for k in 0..steps {
        let (t, y, p) = (start.t + k as f64 * h, s.y, s.p);
        let k1 = (p / cfg.m, force(t, y), lagrangian(t, y, p));
        let (y2, p2) = (y + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
        let k2 = (p2 / cfg.m, force(t + 0.5 * h, y2), lagrangian(t + 0.5 * h, y2, p2));
        let (y3, p3) = (y + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
        let k3 = (p3 / cfg.m, force(t + 0.5 * h, y3), lagrangian(t + 0.5 * h, y3, p3));
        let (y4, p4) = (y + h * k3.0, p + h * k3.1);
        let k4 = (p4 / cfg.m, force(t + h, y4), lagrangian(t + h, y4, p4));
        s = ClassicalState {
            t: t + h,
            y: y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            p: p + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            action: s.action + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        };
    }
    s.t = t_end;
    s
}

/// Exact `psi(T)` for an initial state [`OracleInput::fit`] recognizes.
pub fn evolve_oracle(psi0: &Wavefunction, protocol: &DriveProtocol, cfg: &PhysicsConfig) -> Result<Wavefunction> {
    cfg.validate()?;
    protocol.validate(cfg)?;
    let (input, coeff) = OracleInput::fit(cfg, psi0)?;
    let kappa = 2.0 * PI * input.j as f64 / cfg.l;
    let start = ClassicalState { t: 0.0, y: input.y0, p: input.p0, action: 0.0 };
    let end = classical_trajectory(cfg, protocol, kappa, start, protocol.duration);
    let psi = input.build(cfg, psi0.grid(), &end, coeff)?;
    psi.check_truncation("oracle final state")?;
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenstates::landau_eigenstate;
    use crate::propagator::protocol::Waveform;
    use crate::propagator::tdse::evolve_tdse;

    fn setup() -> (PhysicsConfig, CylinderGrid) {
        let cfg = PhysicsConfig::reference();
        (cfg, CylinderGrid::new(16, 256, -16.0, 16.0, cfg.l).unwrap())
    }

    #[test]
    fn fit_recovers_parameters() {
        let (cfg, grid) = setup();
        let input = OracleInput { j: -2, n: 3, y0: 1.25, p0: -0.4 };
        let psi = input.state(&cfg, &grid).unwrap().scaled(Complex64::new(0.0, 2.0));
        let (fit, coeff) = OracleInput::fit(&cfg, &psi).unwrap();
        assert_eq!((fit.j, fit.n), (-2, 3));
        assert!((fit.y0 - 1.25).abs() < 1e-10);
        assert!((fit.p0 + 0.4).abs() < 1e-10);
        assert!((coeff - Complex64::new(0.0, 2.0)).norm() < 1e-8);
    }

    #[test]
    fn fit_rejects_superpositions() {
        let (cfg, grid) = setup();
        let mut psi = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        psi.add_scaled(Complex64::new(1.0, 0.0), &landau_eigenstate(&cfg, &grid, 0, 1).unwrap()).unwrap();
        assert!(matches!(OracleInput::fit(&cfg, &psi), Err(Error::OracleInput(_))));
        let mut mixed = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        mixed.add_scaled(Complex64::new(0.5, 0.0), &landau_eigenstate(&cfg, &grid, 1, 0).unwrap()).unwrap();
        assert!(matches!(OracleInput::fit(&cfg, &mixed), Err(Error::OracleInput(_))));
    }

    #[test]
    fn static_eigenstate_only_rotates() {
        let (cfg, grid) = setup();
        let psi = landau_eigenstate(&cfg, &grid, 2, 1).unwrap();
        let out = evolve_oracle(&psi, &DriveProtocol::idle(5.0, 1e-3), &cfg).unwrap();
        let expect = psi.clone().scaled(cis(-cfg.level_energy(2) * 5.0));
        assert!(out.distance(&expect).unwrap() < 1e-9);
    }

    #[test]
    fn undriven_displaced_state_oscillates_with_period() {
        // a coherent displacement returns after one cyclotron period
        let (cfg, grid) = setup();
        let input = OracleInput { j: 0, n: 0, y0: 1.0, p0: 0.0 };
        let psi = input.state(&cfg, &grid).unwrap();
        let period = 2.0 * PI / cfg.omega();
        let out = evolve_oracle(&psi, &DriveProtocol::idle(period, 1e-3), &cfg).unwrap();
        assert!(out.distance(&psi.clone().scaled(cis(-0.5 * period))).unwrap() < 1e-9);
    }

    #[test]
    fn constant_field_orbit_closed_form() {
        let (cfg, _) = setup();
        let e = 0.2;
        let p = DriveProtocol::fields(Waveform::Zero, Waveform::Constant { value: e }, 3.0, 1e-3);
        let start = ClassicalState { t: 0.0, y: 0.0, p: 0.0, action: 0.0 };
        let end = classical_trajectory(&cfg, &p, 0.0, start, 3.0);
        // y(t) = d (1 - cos t) with d = q E / (m omega^2); y_c drifts in x only
        let d = cfg.q * e / (cfg.m * cfg.omega().powi(2));
        assert!((end.y - d * (1.0 - 3f64.cos())).abs() < 1e-12);
        assert!((end.p - cfg.m * d * 3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn tdse_matches_oracle() {
        let (cfg, grid) = setup();
        let cfg = cfg.with_phi0(1.3);
        let psi = OracleInput { j: 1, n: 1, y0: -0.5, p0: 0.3 }.state(&cfg, &grid).unwrap();
        let p = DriveProtocol::fields(
            Waveform::Sinusoid { amplitude: 0.2, angular_frequency: 0.6, phase: 0.1 },
            Waveform::Sum {
                terms: vec![Waveform::Constant { value: 0.1 }, Waveform::Step { value: -0.15, start: 1.5 }],
            },
            4.0,
            1.0 / 4096.0,
        );
        let exact = evolve_oracle(&psi, &p, &cfg).unwrap();
        let numeric = evolve_tdse(&psi, &p, &cfg).unwrap().final_state;
        let err = numeric.distance(&exact).unwrap();
        assert!(err < 1e-6, "error {err}");
    }
}
