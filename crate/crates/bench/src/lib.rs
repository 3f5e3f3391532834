//! Fixtures shared by the benchmarks.

use trimem::experiment::{preset, ExperimentConfig};
use trimem::{
    build_hamiltonian_with, derive_energies, integrate, make_initial_state, DensityMatrix, InitialState,
    IntegrationOptions, MasterEquation, Trajectory,
};

/// The all-different triangular network used by every benchmark.
pub fn reference_config() -> ExperimentConfig {
    preset("fig2c").expect("built-in preset").remove(0)
}

/// Generator and initial state of the reference network at truncation `d`.
pub fn network(d: usize) -> (MasterEquation, DensityMatrix) {
    let c = reference_config();
    let e = derive_energies(&c.circuit, c.modes.inductance_matrix).expect("valid preset");
    let h = build_hamiltonian_with(&e, d, c.modes.coupling_sign).expect("valid truncation");
    let eq = MasterEquation::new(&h, &e, &c.circuit.drives).expect("matching sizes");
    let init = InitialState { theta: c.circuit.theta.clone(), varphi: c.circuit.varphi.clone() };
    (eq, make_initial_state(&init, d).expect("valid truncation"))
}

/// `periods` oscillator periods of the qubit network, every step stored.
pub fn short_trajectory(periods: f64) -> Trajectory {
    let c = reference_config();
    let (eq, rho0) = network(2);
    let opts =
        IntegrationOptions { t_end: periods * 200.0 * c.dt, dt: c.dt, store_every: 25, monitor_positivity: false };
    integrate(&rho0, &eq, &opts).expect("stable integration")
}

/// A mixed three-qubit state from the middle of a qubit-network run.
pub fn mixed_state() -> DensityMatrix {
    let t = short_trajectory(4.0);
    t.snapshots[t.snapshots.len() / 2].state.clone()
}
