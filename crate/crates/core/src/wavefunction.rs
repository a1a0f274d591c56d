//! Wavefunction storage, inner products and the `x`-mode representation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, BOUNDARY_CELLS, BOUNDARY_MASS_LIMIT};
use crate::spectral::{cis, plans};

/// Offsets closer than this to an integer are snapped to zero.
const OFFSET_SNAP: f64 = 1e-12;

pub(crate) fn snap_offset(theta: f64) -> f64 {
    let t = theta.rem_euclid(1.0);
    if t < OFFSET_SNAP || 1.0 - t < OFFSET_SNAP {
        0.0
    } else {
        t
    }
}

fn offsets_match(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(1.0);
    d < OFFSET_SNAP || 1.0 - d < OFFSET_SNAP
}

/// Complex amplitudes on a [`CylinderGrid`], stored x-major
/// (`amps[i * ny + k]` is the value at `(x_i, y_k)`).
///
/// `mode_offset` is the fractional `x`-momentum `theta` in `[0, 1)`: the
/// amplitudes satisfy `psi(x + l, y) = exp(2 pi i theta) psi(x, y)`. Physical
/// states on the cylinder have `theta = 0`; a nonzero offset marks an
/// intermediate that only makes sense on the covering plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    grid: CylinderGrid,
    amps: Vec<Complex64>,
    mode_offset: f64,
}

impl Wavefunction {
    pub fn new(grid: CylinderGrid, amps: Vec<Complex64>, mode_offset: f64) -> Result<Self> {
        grid.validate()?;
        if amps.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} amplitudes, got {}", grid.len(), amps.len())));
        }
        if !mode_offset.is_finite() {
            return Err(Error::InvalidGrid("mode offset must be finite".into()));
        }
        Ok(Self { grid, amps, mode_offset: snap_offset(mode_offset) })
    }

    pub fn zeros(grid: CylinderGrid) -> Self {
        Self { grid, amps: vec![Complex64::new(0.0, 0.0); grid.len()], mode_offset: 0.0 }
    }

    /// Samples `f(x, y)` on the grid with the given mode offset. The closure
    /// must already carry the quasi-periodic factor when `theta != 0`.
    pub fn from_fn(grid: CylinderGrid, mode_offset: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut amps = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for k in 0..grid.ny {
                amps.push(f(x, grid.y(k)));
            }
        }
        Self { grid, amps, mode_offset: snap_offset(mode_offset) }
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn mode_offset(&self) -> f64 {
        self.mode_offset
    }

    /// `Psi(x - l, y) = Psi(x, y)`.
    pub fn is_single_valued(&self) -> bool {
        self.mode_offset == 0.0
    }

    pub fn require_single_valued(&self) -> Result<()> {
        if self.is_single_valued() {
            Ok(())
        } else {
            Err(Error::NotSingleValued(self.mode_offset))
        }
    }

    pub fn at(&self, i: usize, k: usize) -> Complex64 {
        self.amps[i * self.grid.ny + k]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::DegenerateState);
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.scale(factor);
        self
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Wavefunction) -> Result<()> {
        check_compatible(self, other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
        Ok(())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Wavefunction) -> Result<f64> {
        check_compatible(self, other)?;
        let s: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_area()).sqrt())
    }

    /// Fraction of the probability inside the `y` boundary layer.
    pub fn boundary_mass(&self) -> f64 {
        let ny = self.grid.ny;
        let mut edge = 0.0;
        for i in 0..self.grid.nx {
            let col = &self.amps[i * ny..(i + 1) * ny];
            edge += col[..BOUNDARY_CELLS].iter().map(|a| a.norm_sqr()).sum::<f64>();
            edge += col[ny - BOUNDARY_CELLS..].iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        edge * self.grid.cell_area() / self.norm_sqr()
    }

    pub fn check_truncation(&self, context: &str) -> Result<()> {
        let mass = self.boundary_mass();
        if mass.is_finite() && mass < BOUNDARY_MASS_LIMIT {
            Ok(())
        } else {
            Err(Error::Truncation { mass, limit: BOUNDARY_MASS_LIMIT, context: context.to_string() })
        }
    }

    /// `<y>` for a normalized state.
    pub fn mean_y(&self) -> f64 {
        let ny = self.grid.ny;
        let mut acc = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr() * self.grid.y(idx % ny);
        }
        acc * self.grid.cell_area() / self.norm_sqr()
    }

    /// Angle of `<exp(2 pi i x / l)>`, or `None` for a state that is
    /// (numerically) uniform around the cylinder.
    pub fn x_centroid_angle(&self) -> Option<f64> {
        let ny = self.grid.ny;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.grid.nx {
            let w: f64 = self.amps[i * ny..(i + 1) * ny].iter().map(|a| a.norm_sqr()).sum();
            acc += cis(2.0 * PI * i as f64 / self.grid.nx as f64) * w;
        }
        let total: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        if acc.norm() <= 1e-12 * total {
            None
        } else {
            Some(acc.arg())
        }
    }

    /// Mode decomposition along `x`.
    pub fn to_modes(&self) -> ModeStack {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let fft = plans(nx);
        let mut scratch = fft.scratch();
        let mut data = vec![Complex64::new(0.0, 0.0); g.len()];
        let twist: Vec<Complex64> = (0..nx).map(|i| cis(-2.0 * PI * self.mode_offset * i as f64 / nx as f64)).collect();
        let factor = (g.dx() / nx as f64).sqrt();
        let mut row = vec![Complex64::new(0.0, 0.0); nx];
        for k in 0..ny {
            for i in 0..nx {
                row[i] = self.amps[i * ny + k] * twist[i];
            }
            fft.forward(&mut row, &mut scratch);
            for s in 0..nx {
                data[s * ny + k] = row[s] * factor;
            }
        }
        ModeStack { grid: g, mode_offset: self.mode_offset, data }
    }
}

fn check_compatible(a: &Wavefunction, b: &Wavefunction) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    if !offsets_match(a.mode_offset, b.mode_offset) {
        return Err(Error::ModeOffsetMismatch { left: a.mode_offset, right: b.mode_offset });
    }
    Ok(())
}

/// Discrete `integral conj(a) b dx dy`.
pub fn inner_product(a: &Wavefunction, b: &Wavefunction) -> Result<Complex64> {
    check_compatible(a, b)?;
    let s: Complex64 = a.amps.iter().zip(&b.amps).map(|(u, v)| u.conj() * v).sum();
    Ok(s * a.grid.cell_area())
}

/// Pointwise multiplication by `exp(i alpha x)`.
///
/// The result's offset is `theta + alpha l / 2 pi (mod 1)`; the integer part
/// of `alpha l / 2 pi` is an exact shift of mode labels.
pub fn multiply_phase_linear_x(psi: &Wavefunction, alpha: f64) -> Wavefunction {
    let g = psi.grid;
    let ny = g.ny;
    let mut out = psi.clone();
    for i in 0..g.nx {
        let f = cis(alpha * g.x(i));
        out.amps[i * ny..(i + 1) * ny].iter_mut().for_each(|a| *a *= f);
    }
    out.mode_offset = snap_offset(psi.mode_offset + alpha * g.l / (2.0 * PI));
    out
}

/// Per-mode `y` profiles `chi_j(y)` with
/// `psi(x, y) = sum_j exp(i kappa_j x) chi_j(y) / sqrt(l)` and
/// `kappa_j = 2 pi (j + theta) / l`.
///
/// Profiles are stored in FFT slot order (`data[s * ny + k]`); use
/// [`CylinderGrid::mode_index`] to recover the integer label. The
/// normalization makes `sum_j integral |chi_j|^2 dy` equal the position-space
/// norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStack {
    grid: CylinderGrid,
    mode_offset: f64,
    data: Vec<Complex64>,
}

impl ModeStack {
    pub fn zeros(grid: CylinderGrid, mode_offset: f64) -> Self {
        Self { grid, mode_offset: snap_offset(mode_offset), data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn mode_offset(&self) -> f64 {
        self.mode_offset
    }

    pub fn slots(&self) -> usize {
        self.grid.nx
    }

    pub fn mode_index(&self, slot: usize) -> i64 {
        self.grid.mode_index(slot)
    }

    pub fn profile(&self, slot: usize) -> &[Complex64] {
        let ny = self.grid.ny;
        &self.data[slot * ny..(slot + 1) * ny]
    }

    pub fn profile_mut(&mut self, slot: usize) -> &mut [Complex64] {
        let ny = self.grid.ny;
        &mut self.data[slot * ny..(slot + 1) * ny]
    }

    pub fn profiles_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let ny = self.grid.ny;
        self.data.chunks_exact_mut(ny)
    }

    pub fn profiles(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.data.chunks_exact(self.grid.ny)
    }

    pub fn mode_power(&self, slot: usize) -> f64 {
        self.profile(slot).iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dy()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dy()
    }

    pub fn to_wavefunction(&self) -> Wavefunction {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let fft = plans(nx);
        let mut scratch = fft.scratch();
        let mut amps = vec![Complex64::new(0.0, 0.0); g.len()];
        let twist: Vec<Complex64> = (0..nx).map(|i| cis(2.0 * PI * self.mode_offset * i as f64 / nx as f64)).collect();
        let factor = 1.0 / (g.dx() * nx as f64).sqrt();
        let mut row = vec![Complex64::new(0.0, 0.0); nx];
        for k in 0..ny {
            for (s, r) in row.iter_mut().enumerate() {
                *r = self.data[s * ny + k];
            }
            fft.inverse(&mut row, &mut scratch);
            for i in 0..nx {
                amps[i * ny + k] = row[i] * twist[i] * factor;
            }
        }
        Wavefunction { grid: g, amps, mode_offset: self.mode_offset }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PhysicsConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> CylinderGrid {
        CylinderGrid::new(16, 64, -8.0, 8.0, 2.0 * PI).unwrap()
    }

    fn random_state(seed: u64, theta: f64) -> Wavefunction {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..g.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Wavefunction::new(g, amps, theta).unwrap().normalized().unwrap()
    }

    fn plane_wave(j: i64) -> Wavefunction {
        let g = grid();
        let cfg = PhysicsConfig::reference();
        let kappa = cfg.kappa(j, 0.0);
        Wavefunction::from_fn(g, 0.0, |x, y| cis(kappa * x) * (-y * y / 2.0).exp()).normalized().unwrap()
    }

    #[test]
    fn self_overlap_is_one() {
        let psi = random_state(1, 0.0);
        let ip = inner_product(&psi, &psi).unwrap();
        assert!((ip - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn global_phase_overlap() {
        let psi = random_state(2, 0.0);
        let rotated = psi.clone().scaled(cis(PI / 3.0));
        let ip = inner_product(&psi, &rotated).unwrap();
        assert!((ip.arg() - PI / 3.0).abs() < 1e-12);
        assert!((ip.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_modes_are_orthogonal() {
        let ip = inner_product(&plane_wave(0), &plane_wave(1)).unwrap();
        assert!(ip.norm() < 1e-10);
    }

    #[test]
    fn conjugate_symmetry() {
        let a = random_state(3, 0.25);
        let b = random_state(4, 0.25);
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn mismatches_are_errors() {
        let a = random_state(5, 0.0);
        let b = random_state(6, 0.5);
        assert!(matches!(inner_product(&a, &b), Err(Error::ModeOffsetMismatch { .. })));
        let other = Wavefunction::zeros(CylinderGrid::new(16, 64, -4.0, 4.0, 2.0 * PI).unwrap());
        assert_eq!(inner_product(&a, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn plane_wave_power_in_one_mode() {
        for j in [0i64, 1, -3] {
            let modes = plane_wave(j).to_modes();
            let slot = grid().mode_slot(j).unwrap();
            assert!((modes.mode_power(slot) - 1.0).abs() < 1e-12);
            for s in (0..modes.slots()).filter(|&s| s != slot) {
                assert!(modes.mode_power(s) < 1e-24);
            }
        }
    }

    #[test]
    fn mode_round_trip_and_parseval() {
        for theta in [0.0, 0.3] {
            let psi = random_state(7, theta);
            let modes = psi.to_modes();
            assert!((modes.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
            let back = modes.to_wavefunction();
            assert!(back.distance(&psi).unwrap() < 1e-12);
            assert_eq!(back.mode_offset(), psi.mode_offset());
        }
    }

    #[test]
    fn offset_bookkeeping() {
        let g = grid();
        let psi = plane_wave(0);
        let shifted = multiply_phase_linear_x(&psi, 2.0 * PI / g.l);
        assert_eq!(shifted.mode_offset(), 0.0);
        assert!(shifted.distance(&plane_wave(1)).unwrap() < 1e-12);
        let half = multiply_phase_linear_x(&psi, PI / g.l);
        assert!((half.mode_offset() - 0.5).abs() < 1e-15);
        assert_eq!(multiply_phase_linear_x(&psi, 0.0), psi);
    }

    #[test]
    fn truncation_detects_edge_mass() {
        let g = grid();
        let centered = Wavefunction::from_fn(g, 0.0, |_, y| Complex64::new((-y * y).exp(), 0.0));
        centered.check_truncation("test").unwrap();
        let edge = Wavefunction::from_fn(g, 0.0, |_, y| Complex64::new((-(y + 7.9).powi(2)).exp(), 0.0));
        assert!(matches!(edge.check_truncation("test"), Err(Error::Truncation { .. })));
    }

    proptest::proptest! {
        #[test]
        fn phase_ramps_compose(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed in 0u64..1000) {
            let psi = random_state(seed, 0.0);
            let two = multiply_phase_linear_x(&multiply_phase_linear_x(&psi, alpha), beta);
            let one = multiply_phase_linear_x(&psi, alpha + beta);
            proptest::prop_assert!(two.distance(&one).unwrap() < 1e-13);
            proptest::prop_assert!((two.mode_offset() - one.mode_offset()).abs() < 1e-12
                || (two.mode_offset() - one.mode_offset()).abs() > 1.0 - 1e-12);
        }

        #[test]
        fn inner_product_survives_mode_round_trip(seed in 0u64..1000, theta in 0.0f64..1.0) {
            let a = random_state(seed, theta);
            let b = random_state(seed + 1, theta);
            let direct = inner_product(&a, &b).unwrap();
            let via = inner_product(&a.to_modes().to_wavefunction(), &b.to_modes().to_wavefunction()).unwrap();
            proptest::prop_assert!((direct - via).norm() < 1e-12);
        }
    }
}
