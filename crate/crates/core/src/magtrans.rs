//! Magnetic translations on the cylinder and its covering plane.
//!
//! Orientation convention: `n = e_x x e_y`, with `x` winding the cylinder and
//! `y` along its axis; `B > 0` points along `n` (outward). Signed areas are
//! positive for paths that turn counterclockwise in the `(x, y)` plane, and
//! every phase sign below follows from that single choice.
//!
//! A translation by `R = (R_x, R_y)` is
//! `M(R) = exp(-i P . R / hbar)` with `P_x = p_x - q phi / (l c)` and
//! `P_y = p_y + q B x / c`. Mixed translations are evaluated as
//! `exp(i q B R_x R_y / (2 hbar c)) M(0, R_y) M(R_x, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{cis, plans, shift_column};
use crate::units::PhysicsConfig;
use crate::wavefunction::{multiply_phase_linear_x, Wavefunction};

/// Displacement `(R_x, R_y)` of the guiding center.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub rx: f64,
    pub ry: f64,
}

impl Displacement {
    pub const ZERO: Displacement = Displacement { rx: 0.0, ry: 0.0 };

    pub fn new(rx: f64, ry: f64) -> Self {
        Self { rx, ry }
    }

    /// `(self x other) . n`.
    pub fn cross(&self, other: &Displacement) -> f64 {
        self.rx * other.ry - self.ry * other.rx
    }

    pub fn norm(&self) -> f64 {
        self.rx.hypot(self.ry)
    }

    pub fn is_finite(&self) -> bool {
        self.rx.is_finite() && self.ry.is_finite()
    }
}

impl std::ops::Add for Displacement {
    type Output = Displacement;
    fn add(self, o: Displacement) -> Displacement {
        Displacement::new(self.rx + o.rx, self.ry + o.ry)
    }
}

impl std::ops::Sub for Displacement {
    type Output = Displacement;
    fn sub(self, o: Displacement) -> Displacement {
        Displacement::new(self.rx - o.rx, self.ry - o.ry)
    }
}

impl std::ops::Mul<f64> for Displacement {
    type Output = Displacement;
    fn mul(self, s: f64) -> Displacement {
        Displacement::new(self.rx * s, self.ry * s)
    }
}

/// Piecewise-linear path starting at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PathPolyline {
    vertices: Vec<Displacement>,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Displacement>) -> Result<Self> {
        let first = vertices.first().ok_or_else(|| Error::InvalidPath("path has no vertices".into()))?;
        if *first != Displacement::ZERO {
            return Err(Error::InvalidPath(format!("first vertex must be (0, 0), got ({}, {})", first.rx, first.ry)));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite vertex ({}, {})", v.rx, v.ry)));
        }
        if let Some(k) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("vertices {k} and {} coincide", k + 1)));
        }
        Ok(Self { vertices })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, y)| Displacement::new(x, y)).collect())
    }

    /// Straight segment from the origin to `end`.
    pub fn straight(end: Displacement) -> Result<Self> {
        Self::new(vec![Displacement::ZERO, end])
    }

    pub fn vertices(&self) -> &[Displacement] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Displacement, Displacement)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn end(&self) -> Displacement {
        *self.vertices.last().expect("non-empty by construction")
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Same geometry with every segment split into `parts` pieces.
    pub fn subdivided(&self, parts: usize) -> Self {
        let parts = parts.max(1);
        let mut vertices = vec![Displacement::ZERO];
        for (a, b) in self.segments() {
            for p in 1..=parts {
                vertices.push(a + (b - a) * (p as f64 / parts as f64));
            }
        }
        Self { vertices }
    }

    /// The path traversed backwards, shifted to start at the origin.
    pub fn reversed(&self) -> Self {
        let end = self.end();
        Self { vertices: self.vertices.iter().rev().map(|&v| v - end).collect() }
    }

    /// This path followed by `other`, translated to start at this end.
    pub fn concat(&self, other: &PathPolyline) -> Result<Self> {
        let end = self.end();
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().skip(1).map(|&v| v + end));
        Self::new(vertices)
    }

    /// Regular polygon approximation of a circle through the origin with the
    /// given center offset; positive `turns` is counterclockwise.
    pub fn circle(center: Displacement, segments: usize, counterclockwise: bool) -> Result<Self> {
        let radius = center.norm();
        let start = (-center.ry).atan2(-center.rx);
        let sign = if counterclockwise { 1.0 } else { -1.0 };
        let mut vertices = vec![Displacement::ZERO];
        for s in 1..=segments {
            let a = start + sign * 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            let v = Displacement::new(center.rx + radius * a.cos(), center.ry + radius * a.sin());
            vertices.push(if s == segments { Displacement::ZERO } else { v });
        }
        Self::new(vertices)
    }
}

impl TryFrom<Vec<[f64; 2]>> for PathPolyline {
    type Error = Error;
    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(points.into_iter().map(|[x, y]| Displacement::new(x, y)).collect())
    }
}

impl From<PathPolyline> for Vec<[f64; 2]> {
    fn from(path: PathPolyline) -> Self {
        path.vertices.into_iter().map(|v| [v.rx, v.ry]).collect()
    }
}

/// State after a path-ordered translation together with the scalar phase
/// factored out of the operator product.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationResult {
    pub state: Wavefunction,
    pub accumulated_phase: f64,
}

/// `M(R_x, 0) = exp(i q R_x phi / (hbar l c)) exp(-i p_x R_x / hbar)`.
pub fn translate_x(psi: &Wavefunction, rx: f64, cfg: &PhysicsConfig) -> Wavefunction {
    if rx == 0.0 {
        return psi.clone();
    }
    let grid = *psi.grid();
    let theta = psi.mode_offset();
    let mut modes = psi.to_modes();
    let ratio = rx / grid.l;
    for slot in 0..grid.nx {
        // kappa R_x = 2 pi (j + theta) R_x / l, reduced before exponentiating
        let turns = (grid.mode_index(slot) as f64 + theta) * ratio;
        let f = cis(-2.0 * std::f64::consts::PI * (turns - turns.round()));
        modes.profile_mut(slot).iter_mut().for_each(|a| *a *= f);
    }
    let mut out = modes.to_wavefunction();
    out.scale(cis(cfg.q * rx * cfg.phi0 / (cfg.hbar * cfg.l * cfg.c)));
    out
}

/// `M(0, R_y) = exp(-i p_y R_y / hbar) exp(-i q B R_y x / (hbar c))`.
///
/// The output is single-valued only when `B l R_y` is a multiple of `h c / q`;
/// otherwise it carries a fractional mode offset.
pub fn translate_y(psi: &Wavefunction, ry: f64, cfg: &PhysicsConfig) -> Result<Wavefunction> {
    if ry == 0.0 {
        return Ok(psi.clone());
    }
    let mut out = multiply_phase_linear_x(psi, -cfg.q * cfg.b * ry / (cfg.hbar * cfg.c));
    let grid = *out.grid();
    let ky = grid.y_wavenumbers();
    let fft = plans(grid.ny);
    for column in out.amplitudes_mut().chunks_exact_mut(grid.ny) {
        shift_column(column, &ky, ry, &fft);
    }
    out.check_truncation("translate_y")?;
    Ok(out)
}

/// `M(R)` with the x-then-y split fixed by the composition phase.
pub fn translate(psi: &Wavefunction, r: Displacement, cfg: &PhysicsConfig) -> Result<Wavefunction> {
    let mut out = translate_y(&translate_x(psi, r.rx, cfg), r.ry, cfg)?;
    out.scale(cis(cfg.q * cfg.b * r.rx * r.ry / (2.0 * cfg.hbar * cfg.c)));
    Ok(out)
}

/// Extra phase in `M(R2) M(R1) = M(R1 + R2) exp(i delta)`:
/// `delta = -(q B / (2 hbar c)) (R1 x R2) . n`.
pub fn compose_phase(r1: Displacement, r2: Displacement, cfg: &PhysicsConfig) -> f64 {
    -cfg.q * cfg.b / (2.0 * cfg.hbar * cfg.c) * r1.cross(&r2)
}

/// Signed area of the polygon formed by the path and the straight closing
/// segment back to the origin (shoelace formula).
pub fn swept_area(path: &PathPolyline) -> f64 {
    0.5 * path.segments().map(|(a, b)| a.cross(&b)).sum::<f64>()
}

/// Applies the segment translations in order.
///
/// Returns `M(R_end) psi` together with the phase `-(q / hbar c) B S`, so that
/// the ordered product equals `exp(i accumulated_phase) M(R_end)`.
pub fn path_ordered_translation(
    psi: &Wavefunction,
    path: &PathPolyline,
    cfg: &PhysicsConfig,
) -> Result<TranslationResult> {
    let mut state = psi.clone();
    for (a, b) in path.segments() {
        state = translate(&state, b - a, cfg)?;
    }
    let accumulated_phase = -cfg.flux_phase(cfg.b * swept_area(path));
    state.scale(cis(-accumulated_phase));
    Ok(TranslationResult { state, accumulated_phase })
}
