//! Time evolution under the driven Landau Hamiltonian
//! `H(t) = [Pi_x(t)^2 + Pi_y^2] / 2m - q E_y(t) y` with
//! `A_x = -B y + phi(t) / l`.

mod factorized;
pub mod hamiltonian;
mod oracle;
mod protocol;
pub(crate) mod tdse;

pub use factorized::{
    compare_factorized, factorized_evolution, factorized_state, free_evolution, FactorizedReport, FactorizedState,
    EXPANSION_LEVELS,
};
pub use hamiltonian::{apply_hamiltonian, apply_hamiltonian_at, eigen_residual, expectation_at, FieldSnapshot};
pub use oracle::{classical_trajectory, evolve_oracle, ClassicalState, OracleInput};
pub use protocol::{drift_displacement, Drive, DriveProtocol, Ramp, RampShape, Waveform, DEFAULT_DT, MAX_DT_OMEGA};
pub use tdse::{
    evolve_tdse, evolve_tdse_with, step_halving, EvolutionOptions, EvolutionRecord, StepHalvingReport, TimeSample,
    MODE_POWER_FLOOR, NORM_DRIFT_LIMIT,
};
