//! `verify`: invariant checks at reduced scale, using the configured physics,
//! grid and step. Each check prints one PASS/FAIL line.

use std::f64::consts::PI;

use anyhow::Result;
use cylab_core::eigenstates::PlanarState;
use cylab_core::propagator::{eigen_residual, step_halving, Drive, OracleInput};
use cylab_core::{
    compose_phase, evolve_oracle, evolve_tdse, factorized_evolution, inner_product, landau_eigenstate,
    periodized_planar_state, translate, translate_x, wrap_phase, Complex64, CylinderGrid, Displacement, DriveProtocol,
    LandauLevelState, PathPolyline, Waveform, Wavefunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;

/// Tolerances of the individual checks.
const ROUND_TRIP_TOL: f64 = 1e-12;
const TOPOLOGICAL_TOL: f64 = 1e-12;
const COMPOSITION_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-6;
const HALVING_TOL: f64 = 1e-6;
const NORM_TOL: f64 = 1e-10;
const DECOUPLING_TOL: f64 = 1e-12;
const FACTORIZED_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e:#}") },
    }
}

fn random_state(grid: CylinderGrid, rng: &mut ChaCha8Rng) -> Result<Wavefunction> {
    let amps = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    Ok(Wavefunction::new(grid, amps, 0.0)?.normalized()?)
}

/// Step count aligned duration, so that drive breakpoints fall on steps.
fn aligned(duration: f64, dt: f64) -> f64 {
    (duration / dt).round().max(1.0) * dt
}

fn smooth_drive(duration: f64, dt: f64) -> DriveProtocol {
    DriveProtocol::fields(
        Waveform::Sinusoid { amplitude: 0.1, angular_frequency: 0.9, phase: 0.3 },
        Waveform::Sinusoid { amplitude: 0.3, angular_frequency: 1.4, phase: 0.0 },
        duration,
        dt,
    )
}

pub fn run_checks(config: &RunConfig) -> Vec<Check> {
    let cfg = config.physics;
    let grid = config.grid();
    let dt = config.numerics.dt;
    let samples = config.verify.random_states;
    let seed = config.seed;
    let mut out = Vec::new();

    out.push(check("mode round trip and Parseval", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut trip, mut parseval): (f64, f64) = (0.0, 0.0);
        for _ in 0..samples {
            let psi = random_state(grid, &mut rng)?;
            let modes = psi.to_modes();
            trip = trip.max(modes.to_wavefunction().distance(&psi)?);
            parseval = parseval.max((modes.norm_sqr() - psi.norm_sqr()).abs());
        }
        let pass = trip < ROUND_TRIP_TOL && parseval < ROUND_TRIP_TOL;
        Ok((pass, format!("round trip {trip:.2e}, Parseval {parseval:.2e}")))
    }));

    out.push(check("topological translation phase", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let phase = Complex64::from_polar(1.0, cfg.flux_phase(cfg.phi0));
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let psi = random_state(grid, &mut rng)?;
            worst = worst.max(translate_x(&psi, cfg.l, &cfg).distance(&psi.clone().scaled(phase))?);
        }
        Ok((worst < TOPOLOGICAL_TOL, format!("max deviation {worst:.2e}")))
    }));

    out.push(check("translation composition", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let planar = PlanarState::Coherent { x0: rng.gen_range(0.0..cfg.l), y0: rng.gen_range(-1.0..1.0), n: 0 };
            let psi = periodized_planar_state(&cfg, &grid, &planar)?;
            let mut r = || Displacement::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (r1, r2) = (r(), r());
            let sequential = translate(&translate(&psi, r1, &cfg)?, r2, &cfg)?;
            let direct =
                translate(&psi, r1 + r2, &cfg)?.scaled(Complex64::from_polar(1.0, compose_phase(r1, r2, &cfg)));
            worst = worst.max(sequential.distance(&direct)?);
        }
        Ok((worst < COMPOSITION_TOL, format!("max deviation {worst:.2e}")))
    }));

    out.push(check("eigenstate residual", || {
        let mut worst: f64 = 0.0;
        for n in 0..=config.eigen.n_max {
            for j in -config.eigen.j_max..=config.eigen.j_max {
                let psi = landau_eigenstate(&cfg, &grid, n, j)?;
                worst = worst.max(eigen_residual(&cfg, &psi, cfg.level_energy(n))?);
            }
        }
        Ok((worst < RESIDUAL_TOL, format!("max residual {worst:.2e}")))
    }));

    out.push(check("truncation detection", || {
        // a strong E_y pushes the orbit center by q E / (m omega^2)
        let push = 0.5 * (grid.y_max - grid.y_min);
        let e_y = push * cfg.m * cfg.omega().powi(2) / cfg.q;
        let psi = landau_eigenstate(&cfg, &grid, 0, 0)?;
        let p =
            DriveProtocol::fields(Waveform::Zero, Waveform::Constant { value: e_y }, aligned(PI / cfg.omega(), dt), dt);
        let detected = evolve_tdse(&psi, &p, &cfg).is_err();
        Ok((detected, format!("orbit pushed by {push:.3} toward the boundary; reported: {detected}")))
    }));

    out.push(check("oracle equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let (mut fid, mut phase): (f64, f64) = (1.0, 0.0);
        for _ in 0..config.verify.oracle_pairs {
            let j = rng.gen_range(-2..=2);
            let center = LandauLevelState::new(&cfg, 0, j).y_center;
            let input = OracleInput {
                j,
                n: rng.gen_range(0..=2),
                y0: center + rng.gen_range(-0.5..0.5),
                p0: rng.gen_range(-0.5..0.5),
            };
            let psi = input.state(&cfg, &grid)?;
            let mut sinusoid = |scale: f64| Waveform::Sinusoid {
                amplitude: rng.gen_range(-scale..scale),
                angular_frequency: rng.gen_range(0.2..2.0),
                phase: rng.gen_range(0.0..2.0 * PI),
            };
            let p = DriveProtocol::fields(sinusoid(0.2), sinusoid(0.2), aligned(1.0 / cfg.omega(), dt), dt);
            let ip = inner_product(&evolve_oracle(&psi, &p, &cfg)?, &evolve_tdse(&psi, &p, &cfg)?.final_state)?;
            fid = fid.min(ip.norm().min(1.0));
            phase = phase.max(ip.arg().abs());
        }
        let pass = 1.0 - fid < ORACLE_TOL && phase < ORACLE_TOL;
        Ok((pass, format!("min fidelity 1 - {:.2e}, max phase {phase:.2e}", 1.0 - fid)))
    }));

    out.push(check("step halving", || {
        let psi = landau_eigenstate(&cfg, &grid, 1, 0)?;
        let report = step_halving(&psi, &smooth_drive(aligned(1.0 / cfg.omega(), dt), dt), &cfg)?;
        let ratio = report.ratio();
        let pass = report.difference < HALVING_TOL && (3.0..=5.0).contains(&ratio);
        Ok((pass, format!("||psi(dt) - psi(dt/2)|| = {:.2e} at dt = {dt}, error ratio {ratio:.3}", report.difference)))
    }));

    out.push(check("norm conservation", || {
        let psi = landau_eigenstate(&cfg, &grid, 0, 0)?;
        let path = PathPolyline::straight(Displacement::new(cfg.l, 0.0))?;
        let p = DriveProtocol::along_path(path, aligned(20.0 / cfg.omega(), dt), dt, config.numerics.ramp);
        let drift = evolve_tdse(&psi, &p, &cfg)?.max_norm_drift;
        Ok((drift < NORM_TOL, format!("max norm drift {drift:.2e} over {} steps", p.steps().0)))
    }));

    out.push(check("single-valuedness", || {
        let psi = landau_eigenstate(&cfg, &grid, 0, 0)?;
        let flux = vec![cfg.phi0, cfg.phi0 + 0.7, cfg.phi0 - 0.4, cfg.phi0 + 1.3];
        let p =
            DriveProtocol { duration: aligned(2.0, dt), dt, drive: Drive::FluxSchedule { flux, e_y: Waveform::Zero } };
        let evolved = evolve_tdse(&psi, &p, &cfg)?.final_state;
        let translated = translate_x(&psi, 0.37 * cfg.l, &cfg);
        let pass = evolved.is_single_valued() && translated.is_single_valued();
        Ok((pass, format!("evolved offset {}, translated offset {}", evolved.mode_offset(), translated.mode_offset())))
    }));

    out.push(check("mode decoupling", || {
        let a = landau_eigenstate(&cfg, &grid, 0, 1)?;
        let b = landau_eigenstate(&cfg, &grid, 1, -1)?;
        let mut sum = a.clone();
        sum.add_scaled(Complex64::new(0.6, -0.3), &b)?;
        let p = smooth_drive(aligned(1.0 / cfg.omega(), dt), dt);
        let mut expect = evolve_tdse(&a, &p, &cfg)?.final_state;
        expect.add_scaled(Complex64::new(0.6, -0.3), &evolve_tdse(&b, &p, &cfg)?.final_state)?;
        let d = evolve_tdse(&sum, &p, &cfg)?.final_state.distance(&expect)?;
        Ok((d < DECOUPLING_TOL, format!("superposition deviation {d:.2e}")))
    }));

    out.push(check("factorized evolution without drive", || {
        let psi = landau_eigenstate(&cfg, &grid, 1, 0)?;
        let report = factorized_evolution(&psi, &DriveProtocol::idle(aligned(2.0, dt), dt), &cfg)?;
        let phase = wrap_phase(report.phase_difference).abs();
        Ok((report.discrepancy < FACTORIZED_TOL, format!("discrepancy {:.2e}, phase {phase:.2e}", report.discrepancy)))
    }));

    out
}
