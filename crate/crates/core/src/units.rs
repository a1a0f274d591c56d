//! Physical constants and derived scales.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants, field strength, threading flux and circumference.
///
/// Gaussian units throughout: the vector potential enters as `q A / c`.
/// Defaults are natural units with the reference geometry `l = 2 pi`, `B = 1`,
/// for which the cyclotron frequency, magnetic length, flux quantum
/// (`2 pi`) and the discrete `y`-translation step `h c / (q B l)` are all of
/// order one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub q: f64,
    pub m: f64,
    pub c: f64,
    /// Magnetic field normal to the cylinder surface (flux per area).
    #[serde(rename = "B")]
    pub b: f64,
    /// Flux threading the cylinder at `t = 0`.
    pub phi0: f64,
    /// Circumference.
    pub l: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl PhysicsConfig {
    pub fn reference() -> Self {
        Self { hbar: 1.0, q: 1.0, m: 1.0, c: 1.0, b: 1.0, phi0: 0.0, l: 2.0 * PI }
    }

    pub fn with_phi0(self, phi0: f64) -> Self {
        Self { phi0, ..self }
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("hbar", self.hbar), ("q", self.q), ("m", self.m), ("c", self.c), ("B", self.b), ("l", self.l)];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if !self.phi0.is_finite() {
            return Err(Error::InvalidConfig(format!("phi0 must be finite, got {}", self.phi0)));
        }
        Ok(())
    }

    /// Cyclotron frequency `q B / (m c)`.
    pub fn omega(&self) -> f64 {
        self.q * self.b / (self.m * self.c)
    }

    /// Flux quantum `h c / q`.
    pub fn flux_quantum(&self) -> f64 {
        2.0 * PI * self.hbar * self.c / self.q
    }

    /// Magnetic length `sqrt(hbar c / (q B))`.
    pub fn magnetic_length(&self) -> f64 {
        (self.hbar * self.c / (self.q * self.b)).sqrt()
    }

    /// Spacing `h c / (q B l)` between adjacent mode centers, which is also
    /// the smallest single-valued magnetic translation along `y`.
    pub fn translation_step(&self) -> f64 {
        self.flux_quantum() / (self.b * self.l)
    }

    /// Phase `q Phi / (hbar c)` associated with a flux `Phi`.
    pub fn flux_phase(&self, flux: f64) -> f64 {
        self.q * flux / (self.hbar * self.c)
    }

    /// Wavevector of mode `j` with fractional offset `theta`.
    pub fn kappa(&self, j: i64, theta: f64) -> f64 {
        2.0 * PI * (j as f64 + theta) / self.l
    }

    /// Oscillator center of mode wavevector `kappa` at flux `phi`:
    /// `phi / (B l) - hbar kappa c / (q B)`.
    pub fn mode_center(&self, kappa: f64, phi: f64) -> f64 {
        phi / (self.b * self.l) - self.hbar * kappa * self.c / (self.q * self.b)
    }

    /// Landau level energy `hbar omega (n + 1/2)`.
    pub fn level_energy(&self, n: usize) -> f64 {
        self.hbar * self.omega() * (n as f64 + 0.5)
    }
}
