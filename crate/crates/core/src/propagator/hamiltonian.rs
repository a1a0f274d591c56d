//! Spectral application of `H(t)` mode by mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::plans;
use crate::units::PhysicsConfig;
use crate::wavefunction::{ModeStack, Wavefunction};

use super::protocol::DriveProtocol;

/// Time-dependent coefficients of `H(t)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    /// Threading flux `phi(t)`.
    pub phi: f64,
    pub e_y: f64,
}

impl FieldSnapshot {
    pub fn static_at(cfg: &PhysicsConfig) -> Self {
        Self { phi: cfg.phi0, e_y: 0.0 }
    }
}

/// Multiplicative part of `H` for mode wavevector `kappa`:
/// `(hbar kappa - q A_x / c)^2 / 2m - q E_y y`.
#[inline]
pub(crate) fn mode_potential(cfg: &PhysicsConfig, kappa: f64, snap: &FieldSnapshot, y: f64) -> f64 {
    let pi_x = cfg.hbar * kappa + cfg.q * cfg.b * y / cfg.c - cfg.q * snap.phi / (cfg.l * cfg.c);
    pi_x * pi_x / (2.0 * cfg.m) - cfg.q * snap.e_y * y
}

fn apply_modes(cfg: &PhysicsConfig, modes: &ModeStack, snap: &FieldSnapshot) -> ModeStack {
    let grid = *modes.grid();
    let theta = modes.mode_offset();
    let ky = grid.y_wavenumbers();
    let fft = plans(grid.ny);
    let mut scratch = fft.scratch();
    let kinetic: Vec<f64> = ky.iter().map(|k| (cfg.hbar * k).powi(2) / (2.0 * cfg.m) / grid.ny as f64).collect();
    let ys: Vec<f64> = (0..grid.ny).map(|k| grid.y(k)).collect();
    let mut out = ModeStack::zeros(grid, theta);
    for slot in 0..grid.nx {
        let kappa = cfg.kappa(grid.mode_index(slot), theta);
        let src = modes.profile(slot);
        let dst = out.profile_mut(slot);
        dst.copy_from_slice(src);
        fft.forward(dst, &mut scratch);
        dst.iter_mut().zip(&kinetic).for_each(|(v, t)| *v *= t);
        fft.inverse(dst, &mut scratch);
        for ((d, s), &y) in dst.iter_mut().zip(src).zip(&ys) {
            *d += s * mode_potential(cfg, kappa, snap, y);
        }
    }
    out
}

/// `H psi` for explicit field values.
pub fn apply_hamiltonian_at(cfg: &PhysicsConfig, psi: &Wavefunction, snap: &FieldSnapshot) -> Wavefunction {
    apply_modes(cfg, &psi.to_modes(), snap).to_wavefunction()
}

/// `H_phi(0) psi`.
pub fn apply_static_hamiltonian(cfg: &PhysicsConfig, psi: &Wavefunction) -> Wavefunction {
    apply_hamiltonian_at(cfg, psi, &FieldSnapshot::static_at(cfg))
}

/// `H(t) psi` with the protocol's flux and field at time `t`.
pub fn apply_hamiltonian(
    psi: &Wavefunction,
    cfg: &PhysicsConfig,
    t: f64,
    protocol: &DriveProtocol,
) -> Result<Wavefunction> {
    protocol.validate(cfg)?;
    Ok(apply_hamiltonian_at(cfg, psi, &protocol.snapshot(cfg, t)))
}

/// `<psi|H|psi> / <psi|psi>`.
pub fn expectation_at(cfg: &PhysicsConfig, psi: &Wavefunction, snap: &FieldSnapshot) -> f64 {
    let h = apply_hamiltonian_at(cfg, psi, snap);
    let num: Complex64 = crate::inner_product(psi, &h).expect("same grid");
    num.re / psi.norm_sqr()
}

pub fn expectation_static(cfg: &PhysicsConfig, psi: &Wavefunction) -> f64 {
    expectation_at(cfg, psi, &FieldSnapshot::static_at(cfg))
}

/// `||H_phi(0) psi - E psi|| / ||psi||`.
pub fn eigen_residual(cfg: &PhysicsConfig, psi: &Wavefunction, energy: f64) -> Result<f64> {
    let mut r = apply_static_hamiltonian(cfg, psi);
    r.add_scaled(Complex64::new(-energy, 0.0), psi)?;
    Ok(r.norm() / psi.norm())
}
