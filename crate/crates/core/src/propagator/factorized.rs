//! The factorization `U(t) = g(t) M(C_R(t)) D(t) U_eps(t)`, with
//! `g(t) = exp(i q B R_y(t) x / hbar c)`, `M(C)` the path-ordered magnetic
//! translation along the drift path and `D(t) = exp(-i H_phi(0) t / hbar)`.
//! Evaluating `g M D psi0` and comparing with the integrated state measures
//! how far `U_eps` is from the identity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigenstates::hermite_functions;
use crate::error::{Error, Result};
use crate::magtrans::{path_ordered_translation, swept_area, Displacement};
use crate::spectral::cis;
use crate::units::PhysicsConfig;
use crate::wavefunction::{inner_product, multiply_phase_linear_x, snap_offset, Wavefunction};

use super::protocol::{Drive, DriveProtocol};
use super::tdse::{evolve_tdse, MODE_POWER_FLOOR};

/// Oscillator levels kept per mode when expanding in eigenstates.
pub const EXPANSION_LEVELS: usize = 40;
/// Minimum fraction of each mode's norm the expansion must capture.
const EXPANSION_COMPLETENESS: f64 = 1.0 - 1e-10;
/// Polyline samples used to trace field-driven drift paths.
const FIELD_PATH_SAMPLES: usize = 1024;

/// `exp(-i H_phi(0) t / hbar) psi` by expansion in the oscillator levels of
/// each mode. Components beyond [`EXPANSION_LEVELS`] are left unevolved and
/// must carry less than `1e-10` of the total norm.
pub fn free_evolution(cfg: &PhysicsConfig, psi: &Wavefunction, t: f64) -> Result<Wavefunction> {
    let grid = *psi.grid();
    let theta = psi.mode_offset();
    let mut modes = psi.to_modes();
    let total = modes.norm_sqr();
    let lb = cfg.magnetic_length();
    let dy = grid.dy();
    let ys: Vec<f64> = (0..grid.ny).map(|k| grid.y(k)).collect();
    let mut captured = 0.0;
    let rotation: Vec<Complex64> =
        (0..=EXPANSION_LEVELS).map(|n| cis(-cfg.level_energy(n) * t / cfg.hbar) - 1.0).collect();
    for slot in 0..grid.nx {
        let power = modes.mode_power(slot);
        if power <= MODE_POWER_FLOOR * total {
            continue;
        }
        let kappa = cfg.kappa(grid.mode_index(slot), theta);
        let center = cfg.mode_center(kappa, cfg.phi0);
        let basis: Vec<Vec<f64>> = ys
            .iter()
            .map(|&y| {
                let mut h = hermite_functions(EXPANSION_LEVELS, (y - center) / lb);
                h.iter_mut().for_each(|v| *v /= lb.sqrt());
                h
            })
            .collect();
        let profile = modes.profile_mut(slot);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); EXPANSION_LEVELS + 1];
        for (v, h) in profile.iter().zip(&basis) {
            for (c, &b) in coeffs.iter_mut().zip(h) {
                *c += v * b;
            }
        }
        coeffs.iter_mut().for_each(|c| *c *= dy);
        captured += coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        for (v, h) in profile.iter_mut().zip(&basis) {
            for ((c, r), &b) in coeffs.iter().zip(&rotation).zip(h) {
                *v += c * r * b;
            }
        }
    }
    let captured = captured / total;
    if captured < EXPANSION_COMPLETENESS {
        return Err(Error::IncompleteExpansion { captured });
    }
    Ok(modes.to_wavefunction())
}

/// `g(t) M(C_R(t)) D(t) psi0` together with its bookkeeping.
#[derive(Debug, Clone)]
pub struct FactorizedState {
    pub state: Wavefunction,
    /// Mode offset of `U'(t) psi0 = M(C) D psi0` before `g` is applied.
    pub u_prime_offset: f64,
    /// Mode offset contributed by `g(t)`.
    pub g_offset: f64,
    pub end: Displacement,
    pub swept_area: f64,
    /// Scalar phase of the path-ordered product, `-(q / hbar c) B S`.
    pub path_phase: f64,
}

pub fn factorized_state(
    psi0: &Wavefunction,
    protocol: &DriveProtocol,
    cfg: &PhysicsConfig,
    t: f64,
) -> Result<FactorizedState> {
    cfg.validate()?;
    protocol.validate(cfg)?;
    psi0.require_single_valued()?;
    if !(0.0..=protocol.duration).contains(&t) {
        return Err(Error::TimeOutOfRange { t, duration: protocol.duration });
    }
    let samples = match protocol.drive {
        Drive::Path { .. } => 1,
        _ => FIELD_PATH_SAMPLES,
    };
    let path = protocol.traced_path(cfg, t, samples)?;
    let free = free_evolution(cfg, psi0, t)?;
    let moved = path_ordered_translation(&free, &path, cfg)?;
    let mut u_prime = moved.state;
    u_prime.scale(cis(moved.accumulated_phase));
    let end = path.end();
    let alpha = cfg.q * cfg.b * end.ry / (cfg.hbar * cfg.c);
    let g_offset = snap_offset((alpha * cfg.l / (2.0 * std::f64::consts::PI)).rem_euclid(1.0));
    let u_prime_offset = u_prime.mode_offset();
    let state = multiply_phase_linear_x(&u_prime, alpha);
    Ok(FactorizedState {
        state,
        u_prime_offset,
        g_offset,
        end,
        swept_area: swept_area(&path),
        path_phase: moved.accumulated_phase,
    })
}

/// Comparison of `g M D psi0` with the integrated state at `T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizedReport {
    #[serde(skip)]
    pub state: Option<Wavefunction>,
    /// `|<psi_tdse | g M D psi0>|` for normalized states.
    pub fidelity: f64,
    /// `arg <psi_tdse | g M D psi0>`.
    pub phase_difference: f64,
    /// `||psi_tdse - g M D psi0||`, the footprint of `U_eps - I`.
    pub discrepancy: f64,
    pub swept_area: f64,
    pub path_phase: f64,
    pub end: Displacement,
    pub u_prime_offset: f64,
    pub g_offset: f64,
}

/// Builds the report against an already integrated final state.
pub fn compare_factorized(
    psi0: &Wavefunction,
    protocol: &DriveProtocol,
    cfg: &PhysicsConfig,
    evolved: &Wavefunction,
) -> Result<FactorizedReport> {
    let f = factorized_state(psi0, protocol, cfg, protocol.duration)?;
    let overlap = inner_product(evolved, &f.state)? / (evolved.norm() * f.state.norm());
    Ok(FactorizedReport {
        fidelity: overlap.norm(),
        phase_difference: overlap.arg(),
        discrepancy: evolved.distance(&f.state)?,
        swept_area: f.swept_area,
        path_phase: f.path_phase,
        end: f.end,
        u_prime_offset: f.u_prime_offset,
        g_offset: f.g_offset,
        state: Some(f.state),
    })
}

/// Integrates the protocol and compares with the factorized form.
pub fn factorized_evolution(
    psi0: &Wavefunction,
    protocol: &DriveProtocol,
    cfg: &PhysicsConfig,
) -> Result<FactorizedReport> {
    let record = evolve_tdse(psi0, protocol, cfg)?;
    compare_factorized(psi0, protocol, cfg, &record.final_state)
}
