//! Loop protocols and extraction of the cyclic geometric phase.
//!
//! A loop drives the guiding center along a polyline from the origin to
//! `(k l, 0)`. For an eigenstate of level `n` the state returns to itself up
//! to `exp(-i E_n T / hbar) exp(i gamma)` with
//! `gamma = q (k phi - B S) / (hbar c)`, `S` the signed swept area.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenstates::{landau_eigenstate, periodized_planar_state, PlanarState};
use crate::error::{Error, Result};
use crate::grid::CylinderGrid;
use crate::magtrans::{swept_area, Displacement, PathPolyline};
use crate::propagator::{
    compare_factorized, evolve_tdse_with, DriveProtocol, EvolutionOptions, EvolutionRecord, Ramp, DEFAULT_DT,
};
use crate::units::PhysicsConfig;
use crate::wavefunction::{inner_product, Wavefunction};
use crate::wrap_phase;

/// Minimum `|<psi0|psi(T)>|` for an evolution to count as cyclic.
pub const CYCLIC_FIDELITY: f64 = 0.99;

/// Allowed deviation of the loop end from `(k l, 0)`.
const CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    AbLoop,
    GeneralLoop,
    ExcursionPlus,
    ExcursionMinus,
    Custom,
}

impl LoopKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LoopKind::AbLoop => "ab_loop",
            LoopKind::GeneralLoop => "general_loop",
            LoopKind::ExcursionPlus => "excursion_plus",
            LoopKind::ExcursionMinus => "excursion_minus",
            LoopKind::Custom => "custom",
        }
    }
}

/// Initial state transported around the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Localization {
    /// Eigenstate `exp(i kappa_j x) chi_n(y - y_c)`, uniform around the
    /// cylinder.
    Mode { j: i64 },
    /// Periodized planar state of level `n` centered at `(x0, y0)`.
    Periodized { x0: f64, y0: f64 },
}

impl Default for Localization {
    fn default() -> Self {
        Localization::Mode { j: 0 }
    }
}

impl Localization {
    pub fn state(&self, cfg: &PhysicsConfig, grid: &CylinderGrid, n: usize) -> Result<Wavefunction> {
        match *self {
            Localization::Mode { j } => landau_eigenstate(cfg, grid, n, j),
            Localization::Periodized { x0, y0 } => {
                periodized_planar_state(cfg, grid, &PlanarState::Coherent { x0, y0, n })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub path: PathPolyline,
    #[serde(rename = "T")]
    pub duration: f64,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub localization: Localization,
}

impl LoopSpec {
    /// Straight transport once around the cylinder at fixed flux.
    pub fn ab_loop(cfg: &PhysicsConfig, n: usize, duration: f64) -> Result<Self> {
        Ok(Self {
            kind: LoopKind::AbLoop,
            path: PathPolyline::straight(Displacement::new(cfg.l, 0.0))?,
            duration,
            n,
            localization: Localization::default(),
        })
    }

    pub fn general(path: PathPolyline, n: usize, duration: f64) -> Self {
        Self { kind: LoopKind::GeneralLoop, path, duration, n, localization: Localization::default() }
    }

    /// Square excursion of signed area `+phi_b / B` (`plus`) or `-phi_b / B`
    /// followed by one turn around the cylinder.
    pub fn excursion(cfg: &PhysicsConfig, plus: bool, phi_b: f64, n: usize, duration: f64) -> Result<Self> {
        let side = (phi_b.abs() / cfg.b).sqrt();
        let l = cfg.l;
        let points: Vec<(f64, f64)> = if side == 0.0 {
            vec![(0.0, 0.0), (l, 0.0)]
        } else {
            let (a, b) = if plus == (phi_b >= 0.0) { ((side, 0.0), (0.0, side)) } else { ((0.0, side), (side, 0.0)) };
            vec![(0.0, 0.0), a, (side, side), b, (0.0, 0.0), (l, 0.0)]
        };
        Ok(Self {
            kind: if plus { LoopKind::ExcursionPlus } else { LoopKind::ExcursionMinus },
            path: PathPolyline::from_points(&points)?,
            duration,
            n,
            localization: Localization::default(),
        })
    }

    pub fn with_localization(mut self, localization: Localization) -> Self {
        self.localization = localization;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    /// Checks closure and returns the winding number `k`.
    pub fn winding(&self, cfg: &PhysicsConfig) -> Result<i64> {
        let end = self.path.end();
        let turns = end.rx / cfg.l;
        let k = turns.round();
        if end.ry.abs() > CLOSURE_TOLERANCE * cfg.l || (turns - k).abs() > CLOSURE_TOLERANCE {
            return Err(Error::InvalidLoop(format!(
                "loop ends at ({}, {}); it must end at (k l, 0) with integer k",
                end.rx, end.ry
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidLoop(format!("T must be > 0, got {}", self.duration)));
        }
        Ok(k as i64)
    }
}

/// Numerical settings shared by all loop runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub grid: CylinderGrid,
    pub dt: f64,
    pub ramp: Ramp,
    pub sample_interval: f64,
}

impl ExperimentSettings {
    pub fn reference(cfg: &PhysicsConfig) -> Self {
        Self { grid: CylinderGrid::reference(cfg), dt: DEFAULT_DT, ramp: Ramp::default(), sample_interval: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: LoopKind,
    pub phi: f64,
    /// `B S`, the signed flux of the contractible part.
    pub phi_b: f64,
    /// `k phi + B S`, all flux the loop encircles.
    pub total_flux: f64,
    pub winding: i64,
    pub gamma_measured: f64,
    pub gamma_measured_unwrapped: f64,
    pub gamma_predicted: f64,
    /// `|wrap(gamma_measured - gamma_predicted)|`.
    pub gamma_error: f64,
    /// `(m / 2 hbar) integral |dR/dt|^2 dt`, the leading finite-`T` excess.
    pub drift_phase: f64,
    /// `wrap(gamma_measured - drift_phase)`.
    pub gamma_drift_corrected: f64,
    pub fidelity: f64,
    /// Whether `fidelity` passes [`CYCLIC_FIDELITY`].
    pub cyclic: bool,
    /// `E_n T / hbar`.
    pub dynamical_phase: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub n: usize,
    pub localization: Localization,
    pub dt: f64,
    pub steps: usize,
    pub max_norm_drift: f64,
    /// `||psi(T) - g M D psi0||` from the factorized form.
    pub factorized_discrepancy: f64,
}

/// `|<psi0|psiT>|` and `arg <psi0|psiT>` for normalized states.
pub fn cyclic_overlap(psi0: &Wavefunction, psi_t: &Wavefunction) -> Result<(f64, f64)> {
    let ip = inner_product(psi0, psi_t)? / (psi0.norm() * psi_t.norm());
    Ok((ip.norm(), ip.arg()))
}

/// `gamma = arg <psi0|psiT> + E_n T / hbar`, wrapped to `(-pi, pi]`.
pub fn berry_phase(
    psi0: &Wavefunction,
    psi_t: &Wavefunction,
    energy: f64,
    duration: f64,
    cfg: &PhysicsConfig,
) -> Result<f64> {
    let (fidelity, arg) = cyclic_overlap(psi0, psi_t)?;
    if !(fidelity > CYCLIC_FIDELITY) {
        return Err(Error::NotCyclic { fidelity, threshold: CYCLIC_FIDELITY });
    }
    Ok(wrap_phase(arg + energy * duration / cfg.hbar))
}

/// `q (k phi - B S) / (hbar c)` for the loop, wrapped to `(-pi, pi]`.
pub fn predicted_phase(cfg: &PhysicsConfig, spec: &LoopSpec) -> Result<f64> {
    let k = spec.winding(cfg)?;
    Ok(wrap_phase(cfg.flux_phase(k as f64 * cfg.phi0 - cfg.b * swept_area(&spec.path))))
}

/// Runs the loop; fails with [`Error::NotCyclic`] below the fidelity gate.
pub fn run_general_loop(
    cfg: &PhysicsConfig,
    spec: &LoopSpec,
    settings: &ExperimentSettings,
) -> Result<ExperimentResult> {
    let result = run_loop_ungated(cfg, spec, settings)?;
    if !result.cyclic {
        return Err(Error::NotCyclic { fidelity: result.fidelity, threshold: CYCLIC_FIDELITY });
    }
    Ok(result)
}

/// Runs the loop and reports the phase whatever the return fidelity.
pub fn run_loop_ungated(
    cfg: &PhysicsConfig,
    spec: &LoopSpec,
    settings: &ExperimentSettings,
) -> Result<ExperimentResult> {
    run_loop_recorded(cfg, spec, settings).map(|(result, _)| result)
}

/// [`run_loop_ungated`] that also returns the integration record.
pub fn run_loop_recorded(
    cfg: &PhysicsConfig,
    spec: &LoopSpec,
    settings: &ExperimentSettings,
) -> Result<(ExperimentResult, EvolutionRecord)> {
    cfg.validate()?;
    let winding = spec.winding(cfg)?;
    let psi0 = spec.localization.state(cfg, &settings.grid, spec.n)?;
    let protocol = DriveProtocol::along_path(spec.path.clone(), spec.duration, settings.dt, settings.ramp);
    let options = EvolutionOptions { sample_interval: settings.sample_interval };
    let record = evolve_tdse_with(&psi0, &protocol, cfg, &options)?;
    let energy = cfg.level_energy(spec.n);
    let (fidelity, arg) = cyclic_overlap(&psi0, &record.final_state)?;
    let gamma = wrap_phase(arg + energy * spec.duration / cfg.hbar);
    let predicted = predicted_phase(cfg, spec)?;
    let phi_b = cfg.b * swept_area(&spec.path);
    let drift_phase = protocol.drift_kinetic_phase(cfg);
    let factorized = compare_factorized(&psi0, &protocol, cfg, &record.final_state)?;
    let result = ExperimentResult {
        kind: spec.kind,
        phi: cfg.phi0,
        phi_b,
        total_flux: winding as f64 * cfg.phi0 + phi_b,
        winding,
        gamma_measured: gamma,
        gamma_measured_unwrapped: predicted + wrap_phase(gamma - predicted),
        gamma_predicted: predicted,
        gamma_error: wrap_phase(gamma - predicted).abs(),
        drift_phase,
        gamma_drift_corrected: wrap_phase(gamma - drift_phase),
        fidelity,
        cyclic: fidelity > CYCLIC_FIDELITY,
        dynamical_phase: energy * spec.duration / cfg.hbar,
        duration: spec.duration,
        n: spec.n,
        localization: spec.localization,
        dt: record.dt,
        steps: record.steps,
        max_norm_drift: record.max_norm_drift,
        factorized_discrepancy: factorized.discrepancy,
    };
    Ok((result, record))
}

pub fn run_ab_loop(
    cfg: &PhysicsConfig,
    n: usize,
    duration: f64,
    settings: &ExperimentSettings,
) -> Result<ExperimentResult> {
    run_general_loop(cfg, &LoopSpec::ab_loop(cfg, n, duration)?, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionPair {
    pub plus: ExperimentResult,
    pub minus: ExperimentResult,
}

/// The two excursion loops sharing the turn around the cylinder with
/// oppositely oriented excursions of flux `phi_b`.
pub fn run_excursion_pair(
    cfg: &PhysicsConfig,
    phi_b: f64,
    n: usize,
    duration: f64,
    settings: &ExperimentSettings,
) -> Result<ExcursionPair> {
    let specs =
        [LoopSpec::excursion(cfg, true, phi_b, n, duration)?, LoopSpec::excursion(cfg, false, phi_b, n, duration)?];
    let mut runs: Vec<Result<ExperimentResult>> =
        specs.par_iter().map(|s| run_general_loop(cfg, s, settings)).collect();
    let minus = runs.pop().expect("two runs")?;
    let plus = runs.pop().expect("two runs")?;
    Ok(ExcursionPair { plus, minus })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phi: f64,
    pub result: Option<ExperimentResult>,
    pub error: Option<String>,
}

/// Runs `template` at each flux in `phis`. Failed rows keep their error and
/// the sweep continues. Measured phases are unwrapped along the grid,
/// starting on the branch of the first prediction.
pub fn flux_sweep(
    cfg: &PhysicsConfig,
    phis: &[f64],
    template: &LoopSpec,
    settings: &ExperimentSettings,
) -> Result<Vec<SweepRow>> {
    if phis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("flux grid must be strictly increasing".into()));
    }
    let mut rows: Vec<SweepRow> = phis
        .par_iter()
        .map(|&phi| match run_general_loop(&cfg.with_phi0(phi), template, settings) {
            Ok(r) => SweepRow { phi, result: Some(r), error: None },
            Err(e) => SweepRow { phi, result: None, error: Some(e.to_string()) },
        })
        .collect();
    let mut previous: Option<f64> = None;
    for row in rows.iter_mut() {
        if let Some(r) = row.result.as_mut() {
            let unwrapped = match previous {
                Some(p) => p + wrap_phase(r.gamma_measured - p),
                None => r.gamma_measured + 2.0 * PI * ((r.gamma_predicted - r.gamma_measured) / (2.0 * PI)).round(),
            };
            r.gamma_measured_unwrapped = unwrapped;
            previous = Some(unwrapped);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticRow {
    #[serde(rename = "T")]
    pub duration: f64,
    pub gamma_measured: f64,
    pub gamma_error: f64,
    pub infidelity: f64,
    pub drift_phase: f64,
    pub corrected_error: f64,
    pub factorized_discrepancy: f64,
    pub cyclic: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticStudy {
    pub gamma_predicted: f64,
    pub rows: Vec<AdiabaticRow>,
    /// `gamma(inf)` from `gamma(T) = gamma(inf) + a / T` on the two longest
    /// cyclic runs.
    pub extrapolated_gamma: Option<f64>,
}

impl AdiabaticStudy {
    /// True when `column` never increases by more than `floor` along the
    /// ladder (failed rows are skipped).
    pub fn non_increasing(&self, column: impl Fn(&AdiabaticRow) -> f64, floor: f64) -> bool {
        let values: Vec<f64> = self.rows.iter().filter(|r| r.error.is_none()).map(column).collect();
        values.windows(2).all(|w| w[1] <= w[0] + floor)
    }
}

pub fn adiabatic_study(
    cfg: &PhysicsConfig,
    template: &LoopSpec,
    ladder: &[f64],
    settings: &ExperimentSettings,
) -> Result<AdiabaticStudy> {
    if ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("T ladder must be strictly increasing".into()));
    }
    let gamma_predicted = predicted_phase(cfg, template)?;
    let rows: Vec<AdiabaticRow> = ladder
        .par_iter()
        .map(|&t| match run_loop_ungated(cfg, &template.clone().with_duration(t), settings) {
            Ok(r) => AdiabaticRow {
                duration: t,
                gamma_measured: r.gamma_measured,
                gamma_error: r.gamma_error,
                infidelity: 1.0 - r.fidelity,
                drift_phase: r.drift_phase,
                corrected_error: wrap_phase(r.gamma_drift_corrected - gamma_predicted).abs(),
                factorized_discrepancy: r.factorized_discrepancy,
                cyclic: r.cyclic,
                error: None,
            },
            Err(e) => AdiabaticRow {
                duration: t,
                gamma_measured: f64::NAN,
                gamma_error: f64::NAN,
                infidelity: f64::NAN,
                drift_phase: f64::NAN,
                corrected_error: f64::NAN,
                factorized_discrepancy: f64::NAN,
                cyclic: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let ok: Vec<&AdiabaticRow> = rows.iter().filter(|r| r.error.is_none() && r.cyclic).collect();
    let extrapolated_gamma = match ok.as_slice() {
        [.., a, b] => {
            // continue gamma(T1) onto the branch of gamma(T2)
            let g1 = b.gamma_measured + wrap_phase(a.gamma_measured - b.gamma_measured);
            Some(wrap_phase((b.duration * b.gamma_measured - a.duration * g1) / (b.duration - a.duration)))
        }
        _ => None,
    };
    Ok(AdiabaticStudy { gamma_predicted, rows, extrapolated_gamma })
}
