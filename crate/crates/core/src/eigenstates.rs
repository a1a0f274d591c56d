//! Analytic eigenstates of the static Hamiltonian `H_phi(0)` on the cylinder.
//!
//! Each `x` mode `exp(i kappa_j x)` reduces the Hamiltonian to a harmonic
//! oscillator of frequency `omega = q B / (m c)` centered at
//! `y_c = phi / (B l) - hbar kappa_j c / (q B)`, so the eigenstates are
//! `exp(i kappa_j x) chi_n(y - y_c)` with energy `hbar omega (n + 1/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CylinderGrid;
use crate::spectral::{cis, plans};
use crate::units::PhysicsConfig;
use crate::wavefunction::Wavefunction;

/// Highest level for which the Hermite recurrence is exercised in tests.
pub const MAX_TESTED_LEVEL: usize = 10;

/// Normalized Hermite functions `h_0(xi) .. h_n_max(xi)` with
/// `integral h_n^2 dxi = 1`, by the three-term recurrence.
pub fn hermite_functions(n_max: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let h0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    out.push(h0);
    if n_max == 0 {
        return out;
    }
    out.push(2f64.sqrt() * xi * h0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Oscillator eigenfunction `chi_n(y - center)` with length scale `scale`.
pub fn oscillator_profile(n: usize, center: f64, scale: f64, y: f64) -> f64 {
    hermite_functions(n, (y - center) / scale)[n] / scale.sqrt()
}

/// Quantum numbers and derived data of the eigenstate `(n, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauLevelState {
    pub n: usize,
    pub j: i64,
    pub kappa: f64,
    pub y_center: f64,
    pub energy: f64,
}

impl LandauLevelState {
    /// Eigenstate data of `H_phi(0)` at the configured flux `phi0`.
    pub fn new(cfg: &PhysicsConfig, n: usize, j: i64) -> Self {
        Self::at_flux(cfg, n, j, cfg.phi0)
    }

    pub fn at_flux(cfg: &PhysicsConfig, n: usize, j: i64, phi: f64) -> Self {
        let kappa = cfg.kappa(j, 0.0);
        Self { n, j, kappa, y_center: cfg.mode_center(kappa, phi), energy: cfg.level_energy(n) }
    }
}

/// `hbar omega (n + 1/2)`.
pub fn energy(cfg: &PhysicsConfig, n: usize) -> f64 {
    cfg.level_energy(n)
}

/// Normalized `exp(i kappa_j x) chi_n(y - y_c)` on the grid.
pub fn landau_eigenstate(cfg: &PhysicsConfig, grid: &CylinderGrid, n: usize, j: i64) -> Result<Wavefunction> {
    cfg.validate()?;
    grid.validate()?;
    if grid.mode_slot(j).is_none() {
        return Err(Error::InvalidGrid(format!("mode {j} outside the Nyquist range of nx = {}", grid.nx)));
    }
    let state = LandauLevelState::new(cfg, n, j);
    let lb = cfg.magnetic_length();
    let reach = (n as f64 + 4.0) * lb;
    if state.y_center - reach < grid.y_min || state.y_center + reach > grid.y_max {
        return Err(Error::OutsideBox(format!("eigenstate (n={n}, j={j}) centered at y={}", state.y_center)));
    }
    let profile: Vec<f64> = (0..grid.ny).map(|k| oscillator_profile(n, state.y_center, lb, grid.y(k))).collect();
    let mut psi = Wavefunction::zeros(*grid);
    let ny = grid.ny;
    for i in 0..grid.nx {
        let phase = cis(2.0 * PI * ((j as f64 * i as f64 / grid.nx as f64).fract()));
        for (a, &p) in psi.amplitudes_mut()[i * ny..(i + 1) * ny].iter_mut().zip(&profile) {
            *a = phase * p;
        }
    }
    psi.normalize()?;
    psi.check_truncation("landau_eigenstate")?;
    Ok(psi)
}

/// Localized eigenstate on the infinite plane, to be periodized around the
/// cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlanarState {
    /// Level-`n` state built on the minimal-uncertainty Gaussian centered at
    /// `(x0, y0)`.
    Coherent { x0: f64, y0: f64, n: usize },
    /// A mode eigenstate `(n, j)`, already periodic.
    LandauMode { n: usize, j: i64 },
}

impl PlanarState {
    pub fn level(&self) -> usize {
        match *self {
            PlanarState::Coherent { n, .. } | PlanarState::LandauMode { n, .. } => n,
        }
    }
}

/// Gaussian lowest-level planar state in the gauge `A_x = -B y + phi / l`,
/// centered at `(x0, y0)`.
fn planar_ground(cfg: &PhysicsConfig, x0: f64, y0: f64, x: f64, y: f64) -> Complex64 {
    let lb2 = cfg.magnetic_length().powi(2);
    let u = x - x0;
    let v = y - y0;
    let flux = cfg.q * cfg.phi0 * x / (cfg.hbar * cfg.l * cfg.c);
    let re = -(u * u + v * v) / (4.0 * lb2);
    let im = flux - u * v / (2.0 * lb2) - u * y0 / lb2;
    Complex64::new(re, im).exp()
}

/// Number of copies `k` on each side kept in the periodized sum.
fn periodization_terms(cfg: &PhysicsConfig, n: usize) -> usize {
    let sigma = (2.0 * n as f64 + 1.0).sqrt() * 2f64.sqrt() * cfg.magnetic_length();
    (6.0 * sigma / cfg.l).ceil() as usize + 1
}

/// `C sum_k exp(-i p_x k l / hbar) Psi_n`, i.e. the sum of copies of a planar
/// eigenstate shifted by multiples of the circumference, normalized on the
/// grid.
pub fn periodized_planar_state(cfg: &PhysicsConfig, grid: &CylinderGrid, planar: &PlanarState) -> Result<Wavefunction> {
    cfg.validate()?;
    grid.validate()?;
    let mut psi = match *planar {
        PlanarState::LandauMode { n, j } => {
            let base = landau_eigenstate(cfg, grid, n, j)?;
            let mut sum = Wavefunction::zeros(*grid);
            for _ in 0..3 {
                sum.add_scaled(Complex64::new(1.0, 0.0), &base)?;
            }
            sum
        }
        PlanarState::Coherent { x0, y0, n } => {
            let lb = cfg.magnetic_length();
            let overlap = (-(cfg.l / 2.0).powi(2) / (4.0 * lb * lb)).exp();
            if overlap > 1e-6 {
                log::info!(
                    "planar state is wide compared to the circumference: neighbouring copies overlap at {overlap:.2e}"
                );
            }
            let terms = periodization_terms(cfg, 0) as i64;
            let mut psi = Wavefunction::from_fn(*grid, 0.0, |x, y| {
                (-terms..=terms).map(|k| planar_ground(cfg, x0, y0, x - k as f64 * cfg.l, y)).sum()
            });
            for level in 0..n {
                psi = raise(cfg, &psi)?;
                psi.scale(Complex64::new(1.0 / ((level + 1) as f64).sqrt(), 0.0));
            }
            psi
        }
    };
    psi.normalize()?;
    psi.check_truncation("periodized_planar_state")?;
    Ok(psi)
}

/// Landau-level raising operator `(Pi_x - i Pi_y) / sqrt(2 hbar q B / c)`
/// at flux `phi0`, applied spectrally.
fn raise(cfg: &PhysicsConfig, psi: &Wavefunction) -> Result<Wavefunction> {
    let grid = *psi.grid();
    let mut modes = psi.to_modes();
    let ky = grid.y_wavenumbers();
    let fft = plans(grid.ny);
    let mut scratch = fft.scratch();
    let theta = modes.mode_offset();
    let norm = 1.0 / (2.0 * cfg.hbar * cfg.q * cfg.b / cfg.c).sqrt();
    let ys: Vec<f64> = (0..grid.ny).map(|k| grid.y(k)).collect();
    for slot in 0..grid.nx {
        let kappa = cfg.kappa(grid.mode_index(slot), theta);
        let profile = modes.profile_mut(slot);
        let mut py = profile.to_vec();
        fft.forward(&mut py, &mut scratch);
        for (v, &k) in py.iter_mut().zip(&ky) {
            *v *= cfg.hbar * k / grid.ny as f64;
        }
        fft.inverse(&mut py, &mut scratch);
        for ((v, &p), &y) in profile.iter_mut().zip(&py).zip(&ys) {
            let pix = cfg.hbar * kappa + cfg.q * cfg.b * y / cfg.c - cfg.q * cfg.phi0 / (cfg.l * cfg.c);
            *v = (*v * pix - Complex64::i() * p) * norm;
        }
    }
    let out = modes.to_wavefunction();
    if out.norm() == 0.0 {
        return Err(Error::DegenerateState);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::hamiltonian::{apply_static_hamiltonian, eigen_residual};
    use crate::wavefunction::inner_product;

    fn reference() -> (PhysicsConfig, CylinderGrid) {
        let cfg = PhysicsConfig::reference();
        (cfg, CylinderGrid::reference(&cfg))
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        // Gauss-Hermite-free check: fine trapezoid over [-14, 14].
        let n_max = MAX_TESTED_LEVEL;
        let h = 0.01;
        let mut gram = vec![vec![0.0; n_max + 1]; n_max + 1];
        let mut xi = -14.0;
        while xi <= 14.0 {
            let v = hermite_functions(n_max, xi);
            for a in 0..=n_max {
                for b in 0..=n_max {
                    gram[a][b] += v[a] * v[b] * h;
                }
            }
            xi += h;
        }
        for (a, row) in gram.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-10, "({a},{b}) {g}");
            }
        }
    }

    #[test]
    fn ground_state_center_and_energy() {
        let (cfg, grid) = reference();
        let s = LandauLevelState::new(&cfg, 0, 0);
        assert_eq!(s.y_center, 0.0);
        assert_eq!(s.energy, 0.5);
        let psi = landau_eigenstate(&cfg, &grid, 0, 0).unwrap();
        assert!(psi.mean_y().abs() < 1e-12);
    }

    #[test]
    fn centers_follow_mode_and_flux() {
        let (cfg, _) = reference();
        assert!((LandauLevelState::new(&cfg, 0, 1).y_center + 1.0).abs() < 1e-15);
        let cfg_pi = cfg.with_phi0(PI);
        assert!((LandauLevelState::new(&cfg_pi, 0, 0).y_center - 0.5).abs() < 1e-15);
    }

    #[test]
    fn energies() {
        let (cfg, _) = reference();
        assert_eq!(energy(&cfg, 0), 0.5);
        assert_eq!(energy(&cfg, 3), 3.5);
        for j in -3..=3 {
            assert_eq!(LandauLevelState::new(&cfg, 2, j).energy, energy(&cfg, 2));
        }
    }

    #[test]
    fn residuals_below_threshold() {
        let (cfg, grid) = reference();
        for n in 0..=3 {
            for j in -4..=4 {
                let psi = landau_eigenstate(&cfg, &grid, n, j).unwrap();
                let r = eigen_residual(&cfg, &psi, energy(&cfg, n)).unwrap();
                assert!(r < 1e-8, "n={n} j={j} residual {r:e}");
            }
        }
    }

    #[test]
    fn out_of_box_rejected() {
        let (cfg, grid) = reference();
        assert!(matches!(landau_eigenstate(&cfg, &grid, 0, 14), Err(Error::OutsideBox(_))));
        assert!(landau_eigenstate(&cfg, &grid, 0, 16).is_err());
    }

    #[test]
    fn orthonormal_family() {
        let (cfg, grid) = reference();
        let states: Vec<_> = (0..=3)
            .flat_map(|n| (-4..=4).map(move |j| (n, j)))
            .map(|(n, j)| landau_eigenstate(&cfg, &grid, n, j).unwrap())
            .collect();
        for (a, sa) in states.iter().enumerate() {
            for (b, sb) in states.iter().enumerate() {
                let ip = inner_product(sa, sb).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - Complex64::new(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_flow_by_one_flux_quantum() {
        let (cfg, grid) = reference();
        for phi in [0.0, 0.7] {
            let base = cfg.with_phi0(phi);
            let shifted = base.with_phi0(phi + base.flux_quantum());
            for j in -3..=3 {
                let a = landau_eigenstate(&shifted, &grid, 1, j).unwrap();
                let b = landau_eigenstate(&base, &grid, 1, j - 1).unwrap();
                let dy = LandauLevelState::new(&shifted, 1, j).y_center - LandauLevelState::new(&base, 1, j).y_center;
                assert!((dy - cfg.translation_step()).abs() < 1e-12);
                let raised = crate::wavefunction::multiply_phase_linear_x(&b, 2.0 * PI / cfg.l);
                assert!(a.distance(&raised).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn periodized_state_is_localized_eigenstate() {
        let cfg = PhysicsConfig::reference().with_b(16.0).with_phi0(0.4);
        let grid = CylinderGrid::new(128, 512, -8.0, 8.0, cfg.l).unwrap();
        for n in 0..=1 {
            let planar = PlanarState::Coherent { x0: 2.0, y0: 0.3, n };
            let psi = periodized_planar_state(&cfg, &grid, &planar).unwrap();
            let r = eigen_residual(&cfg, &psi, energy(&cfg, n)).unwrap();
            assert!(r < 1e-8, "n={n} residual {r:e}");
            let angle = psi.x_centroid_angle().expect("localized in x");
            assert!((angle - 2.0 * PI * 2.0 / cfg.l).abs() < 1e-6);
        }
    }

    #[test]
    fn periodized_reference_state_residual() {
        let (cfg, grid) = reference();
        let psi = periodized_planar_state(&cfg, &grid, &PlanarState::Coherent { x0: PI, y0: 0.0, n: 0 }).unwrap();
        let r = eigen_residual(&cfg, &psi, energy(&cfg, 0)).unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn periodizing_a_periodic_state_is_idempotent() {
        let (cfg, grid) = reference();
        let mode = landau_eigenstate(&cfg, &grid, 1, 2).unwrap();
        let psi = periodized_planar_state(&cfg, &grid, &PlanarState::LandauMode { n: 1, j: 2 }).unwrap();
        assert!(psi.distance(&mode).unwrap() < 1e-13);
    }

    #[test]
    fn periodized_mode_weights_are_gaussian() {
        // Fourier transform of the planar Gaussian along x gives mode power
        // proportional to exp(-(kappa + y0 / lB^2)^2 lB^2).
        let (cfg, grid) = reference();
        let y0 = 0.6;
        let psi = periodized_planar_state(&cfg, &grid, &PlanarState::Coherent { x0: 1.0, y0, n: 0 }).unwrap();
        let modes = psi.to_modes();
        let weight = |j: i64| (-(cfg.kappa(j, 0.0) + y0).powi(2)).exp();
        let total: f64 = (-16..16).map(weight).sum();
        for j in -5..=5 {
            let p = modes.mode_power(grid.mode_slot(j).unwrap());
            assert!((p - weight(j) / total).abs() < 1e-10, "j={j} {p} vs {}", weight(j) / total);
        }
    }

    #[test]
    fn static_hamiltonian_is_linear() {
        let (cfg, grid) = reference();
        let a = landau_eigenstate(&cfg, &grid, 0, 1).unwrap();
        let b = landau_eigenstate(&cfg, &grid, 2, -1).unwrap();
        let mut sum = a.clone();
        sum.add_scaled(Complex64::new(0.3, 0.4), &b).unwrap();
        let mut expect = apply_static_hamiltonian(&cfg, &a);
        expect.add_scaled(Complex64::new(0.3, 0.4), &apply_static_hamiltonian(&cfg, &b)).unwrap();
        assert!(apply_static_hamiltonian(&cfg, &sum).distance(&expect).unwrap() < 1e-12);
    }
}
