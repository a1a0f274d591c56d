//! Cylinder discretization: periodic `x`, truncated `y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PhysicsConfig;

/// Number of grid rows at each `y` edge that make up the boundary layer
/// checked by the truncation invariant.
pub const BOUNDARY_CELLS: usize = 4;

/// Probability allowed inside the boundary layer.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-10;

/// Sample points `x_i = i l / nx` (periodic, `x + l` identified with `x`)
/// and `y_k = y_min + k (y_max - y_min) / ny`.
///
/// The `y` axis is a hard-truncated box. Spectral operators along `y` treat
/// it as periodic, which is indistinguishable from a zero boundary while the
/// boundary layer stays empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub nx: usize,
    pub ny: usize,
    pub y_min: f64,
    pub y_max: f64,
    /// Circumference, copied from the physics configuration.
    pub l: f64,
}

impl CylinderGrid {
    pub fn new(nx: usize, ny: usize, y_min: f64, y_max: f64, l: f64) -> Result<Self> {
        let grid = Self { nx, ny, y_min, y_max, l };
        grid.validate()?;
        Ok(grid)
    }

    /// 32 x 256 points on `y in [-16, 16)` for the given circumference.
    pub fn reference(cfg: &PhysicsConfig) -> Self {
        Self { nx: 32, ny: 256, y_min: -16.0, y_max: 16.0, l: cfg.l }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nx.is_power_of_two() || !self.ny.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("nx and ny must be powers of two, got {} x {}", self.nx, self.ny)));
        }
        if self.ny < 4 * BOUNDARY_CELLS {
            return Err(Error::InvalidGrid(format!("ny = {} is too small", self.ny)));
        }
        if !(self.y_min.is_finite() && self.y_max.is_finite() && self.y_min < self.y_max) {
            return Err(Error::InvalidGrid(format!("need y_min < y_max, got [{}, {}]", self.y_min, self.y_max)));
        }
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::InvalidGrid(format!("circumference must be > 0, got {}", self.l)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.l / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, k: usize) -> f64 {
        self.y_min + k as f64 * self.dy()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Integer mode label of FFT slot `k`, in `[-nx/2, nx/2)`.
    pub fn mode_index(&self, k: usize) -> i64 {
        let n = self.nx as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT slot holding integer mode `j`, if inside the Nyquist range.
    pub fn mode_slot(&self, j: i64) -> Option<usize> {
        let n = self.nx as i64;
        if j < -n / 2 || j >= n / 2 {
            None
        } else {
            Some(j.rem_euclid(n) as usize)
        }
    }

    /// Angular wavenumbers along `y` in FFT order.
    pub fn y_wavenumbers(&self) -> Vec<f64> {
        let n = self.ny as i64;
        let span = self.y_max - self.y_min;
        (0..n)
            .map(|k| {
                let f = if k < n / 2 { k } else { k - n };
                2.0 * std::f64::consts::PI * f as f64 / span
            })
            .collect()
    }

    /// Whether `[lo, hi]` lies inside the `y` box clear of the boundary layer.
    pub fn contains_band(&self, lo: f64, hi: f64) -> bool {
        let margin = BOUNDARY_CELLS as f64 * self.dy();
        lo >= self.y_min + margin && hi <= self.y_max - margin
    }
}
