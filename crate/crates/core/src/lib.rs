//! Numerical laboratory for the time-dependent Landau problem on a cylinder
//! threaded by an Aharonov-Bohm flux.
//!
//! The cylinder has circumference `l` along the periodic `x` axis and is
//! truncated along the axial `y` direction. A magnetic field `B` is normal to
//! the surface and a flux `phi` threads the hollow. Because the Hamiltonian is
//! invariant under continuous `x` translations, every state is stored together
//! with its `x`-Fourier (mode) decomposition, and each mode evolves as an
//! independent one-dimensional driven oscillator.
//!
//! Module map:
//! - [`units`], [`grid`], [`wavefunction`]: constants, geometry, storage and
//!   the mode representation.
//! - [`eigenstates`]: analytic Landau-level eigenstates and periodized
//!   localized states.
//! - [`magtrans`]: magnetic translations, their composition phase and the
//!   swept-area phase of polyline paths.
//! - [`propagator`]: drive protocols, the split-step integrator, the exact
//!   driven-oscillator oracle and the factorized evolution cross-check.
//! - [`experiments`]: loop protocols and geometric-phase extraction.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigenstates;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod magtrans;
pub mod propagator;
mod spectral;
pub mod units;
pub mod wavefunction;

pub use num_complex::Complex64;

pub use eigenstates::{energy, landau_eigenstate, periodized_planar_state, LandauLevelState, PlanarState};
pub use error::{Error, Result};
pub use grid::CylinderGrid;
pub use magtrans::{
    compose_phase, path_ordered_translation, swept_area, translate, translate_x, translate_y, Displacement,
    PathPolyline, TranslationResult,
};
pub use propagator::{
    apply_hamiltonian, drift_displacement, evolve_oracle, evolve_tdse, evolve_tdse_with, factorized_evolution,
    DriveProtocol, EvolutionOptions, EvolutionRecord, OracleInput, Ramp, RampShape, Waveform,
};
pub use units::PhysicsConfig;
pub use wavefunction::{inner_product, multiply_phase_linear_x, ModeStack, Wavefunction};

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}
