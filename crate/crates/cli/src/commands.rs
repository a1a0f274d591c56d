//! The `eigen`, `run`, `sweep` and `adiabatic-study` subcommands.

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use cylab_core::experiments::{adiabatic_study, flux_sweep, run_loop_recorded, ExperimentResult, SweepRow};
use cylab_core::propagator::{eigen_residual, EvolutionRecord};
use cylab_core::{landau_eigenstate, LandauLevelState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{out_path, write_csv, write_json, Cell};

pub const RESULT_COLUMNS: [&str; 14] = [
    "phi",
    "phi_B",
    "gamma_measured",
    "gamma_predicted",
    "fidelity",
    "T",
    "n",
    "kind",
    "gamma_measured_unwrapped",
    "gamma_error",
    "drift_phase",
    "gamma_drift_corrected",
    "total_flux",
    "factorized_discrepancy",
];

fn result_cells(r: &ExperimentResult) -> Vec<Cell> {
    vec![
        r.phi.into(),
        r.phi_b.into(),
        r.gamma_measured.into(),
        r.gamma_predicted.into(),
        r.fidelity.into(),
        r.duration.into(),
        r.n.into(),
        r.kind.as_str().into(),
        r.gamma_measured_unwrapped.into(),
        r.gamma_error.into(),
        r.drift_phase.into(),
        r.gamma_drift_corrected.into(),
        r.total_flux.into(),
        r.factorized_discrepancy.into(),
    ]
}

#[derive(Serialize)]
struct EigenRow {
    n: usize,
    j: i64,
    kappa: f64,
    y_c: f64,
    energy: f64,
    residual: f64,
}

pub fn eigen(config: &RunConfig, out: &Path) -> Result<()> {
    let cfg = &config.physics;
    let grid = config.grid();
    let t = config.eigen;
    let mut rows = Vec::new();
    for n in 0..=t.n_max {
        for j in -t.j_max..=t.j_max {
            let state = LandauLevelState::new(cfg, n, j);
            let psi = landau_eigenstate(cfg, &grid, n, j)?;
            let residual = eigen_residual(cfg, &psi, state.energy)?;
            rows.push(EigenRow { n, j, kappa: state.kappa, y_c: state.y_center, energy: state.energy, residual });
        }
    }
    let cells = rows
        .iter()
        .map(|r| vec![r.n.into(), r.j.into(), r.kappa.into(), r.y_c.into(), r.energy.into(), r.residual.into()])
        .collect();
    write_csv(
        &out_path(out, "eigenstates.csv"),
        "eigen",
        config,
        &["n", "j", "kappa", "y_c", "E_n", "residual"],
        cells,
    )?;
    write_json(&out_path(out, "eigen.json"), "eigen", config, &rows)?;
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    println!("eigen: {} states, max residual {worst:.3e}", rows.len());
    Ok(())
}

pub fn run(config: &RunConfig, out: &Path) -> Result<()> {
    let cfg = &config.physics;
    let settings = config.settings();
    let specs = config.experiment.loops(cfg)?;
    let started = Instant::now();
    let runs: Vec<(ExperimentResult, EvolutionRecord)> =
        specs.par_iter().map(|s| run_loop_recorded(cfg, s, &settings)).collect::<Result<_, _>>()?;
    eprintln!("run: {:.2} s", started.elapsed().as_secs_f64());

    let results: Vec<&ExperimentResult> = runs.iter().map(|(r, _)| r).collect();
    write_csv(
        &out_path(out, "results.csv"),
        "run",
        config,
        &RESULT_COLUMNS,
        results.iter().map(|r| result_cells(r)).collect(),
    )?;
    let mut series = Vec::new();
    for (r, rec) in &runs {
        for s in &rec.samples {
            series.push(vec![
                r.kind.as_str().into(),
                s.t.into(),
                s.rx.into(),
                s.ry.into(),
                s.norm.into(),
                s.mean_y.into(),
                s.x_angle.into(),
                s.kinetic_energy.into(),
                s.energy.into(),
            ]);
        }
    }
    write_csv(
        &out_path(out, "timeseries.csv"),
        "run",
        config,
        &["kind", "t", "rx", "ry", "norm", "mean_y", "x_angle", "kinetic_energy", "energy"],
        series,
    )?;
    write_json(&out_path(out, "run.json"), "run", config, &results)?;
    for r in &results {
        println!(
            "{}: gamma_measured = {:.6}, gamma_predicted = {:.6}, fidelity = {:.9} (drift phase {:.6}, drift-corrected gamma {:.6})",
            r.kind.as_str(),
            r.gamma_measured,
            r.gamma_predicted,
            r.fidelity,
            r.drift_phase,
            r.gamma_drift_corrected
        );
        if !r.cyclic {
            println!("{}: warning: fidelity below the cyclicity gate; the phase is not a Berry phase", r.kind.as_str());
        }
    }
    Ok(())
}

pub fn sweep(config: &RunConfig, out: &Path) -> Result<()> {
    let cfg = &config.physics;
    let settings = config.settings();
    let phis = config.sweep.phi.values();
    let started = Instant::now();
    let mut rows: Vec<(String, SweepRow)> = Vec::new();
    for spec in config.experiment.loops(cfg)? {
        for row in flux_sweep(cfg, &phis, &spec, &settings)? {
            rows.push((spec.kind.as_str().to_string(), row));
        }
    }
    eprintln!("sweep: {:.2} s", started.elapsed().as_secs_f64());
    let mut header: Vec<&str> = RESULT_COLUMNS.to_vec();
    header.push("error");
    let cells = rows
        .iter()
        .map(|(kind, row)| match &row.result {
            Some(r) => {
                let mut c = result_cells(r);
                c.push(Cell::Missing);
                c
            }
            None => {
                let mut c: Vec<Cell> = (0..RESULT_COLUMNS.len()).map(|_| Cell::Missing).collect();
                c[0] = row.phi.into();
                c[7] = kind.as_str().into();
                c.push(row.error.as_deref().into());
                c
            }
        })
        .collect();
    write_csv(&out_path(out, "sweep.csv"), "sweep", config, &header, cells)?;
    let log: Vec<&SweepRow> = rows.iter().map(|(_, r)| r).collect();
    write_json(&out_path(out, "sweep.json"), "sweep", config, &log)?;
    let failed = rows.iter().filter(|(_, r)| r.error.is_some()).count();
    println!("sweep: {} rows, {failed} failed", rows.len());
    Ok(())
}

pub fn adiabatic(config: &RunConfig, out: &Path) -> Result<()> {
    let cfg = &config.physics;
    let settings = config.settings();
    let started = Instant::now();
    let mut studies = Vec::new();
    for spec in config.experiment.loops(cfg)? {
        studies.push((spec.kind, adiabatic_study(cfg, &spec, &config.adiabatic_study.durations, &settings)?));
    }
    eprintln!("adiabatic-study: {:.2} s", started.elapsed().as_secs_f64());
    let mut cells = Vec::new();
    for (kind, study) in &studies {
        for r in &study.rows {
            cells.push(vec![
                kind.as_str().into(),
                r.duration.into(),
                r.gamma_measured.into(),
                study.gamma_predicted.into(),
                r.gamma_error.into(),
                r.infidelity.into(),
                r.drift_phase.into(),
                r.corrected_error.into(),
                r.factorized_discrepancy.into(),
                r.cyclic.into(),
                r.error.as_deref().into(),
            ]);
        }
    }
    write_csv(
        &out_path(out, "adiabatic.csv"),
        "adiabatic-study",
        config,
        &[
            "kind",
            "T",
            "gamma_measured",
            "gamma_predicted",
            "gamma_error",
            "infidelity",
            "drift_phase",
            "corrected_error",
            "factorized_discrepancy",
            "cyclic",
            "error",
        ],
        cells,
    )?;
    let log: Vec<_> = studies.iter().map(|(_, s)| s).collect();
    write_json(&out_path(out, "adiabatic.json"), "adiabatic-study", config, &log)?;
    for (kind, study) in &studies {
        let monotone = study.non_increasing(|r| r.gamma_error, 1e-10) && study.non_increasing(|r| r.infidelity, 1e-10);
        println!(
            "{}: errors non-increasing across the ladder: {monotone}; 1/T extrapolated gamma {}",
            kind.as_str(),
            study.extrapolated_gamma.map_or("n/a".into(), |g| format!("{g:.6}"))
        );
    }
    Ok(())
}

/// Returns whether every check passed.
pub fn verify(config: &RunConfig, out: &Path) -> Result<bool> {
    let started = Instant::now();
    let checks = crate::verify::run_checks(config);
    eprintln!("verify: {:.2} s", started.elapsed().as_secs_f64());
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("verify: {passed}/{} checks passed", checks.len());
    write_json(&out_path(out, "verify.json"), "verify", config, &checks)?;
    Ok(passed == checks.len())
}
