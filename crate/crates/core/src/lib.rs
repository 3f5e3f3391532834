//! Simulation and correlation analysis for networks of two or three
//! inductively coupled superconducting quantum memristors.
//!
//! The pipeline runs from raw circuit parameters ([`circuit`]) through the
//! time-dependent master equation ([`lindblad`]) to memristive observables
//! ([`observables`]) and quantum-correlation measures ([`entanglement`]).
//! [`moments`] integrates the closed first-moment equations as an independent
//! cross-check of the density-matrix engine, and [`experiment`] wires
//! everything into a declarative, file-driven experiment runner.
//!
//! Internally ħ = 1: every energy is stored as an angular frequency in rad/s.

pub mod circuit;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod layout;
pub mod lindblad;
pub mod moments;
pub mod observables;
pub mod state;
pub mod units;

pub use circuit::{
    build_hamiltonian, build_hamiltonian_with, derive_energies, inductance_matrix, CircuitSpec, CouplingForm,
    DerivedEnergies, DriveSpec, HamiltonianMatrix, InductanceMode, Topology, Waveform,
};
pub use entanglement::{
    concurrence, correlation_report, eof_one_vs_two, eof_two_qubit, monogamy_m2, negativity, partial_trace,
    partial_transpose, tripartite_negativity, Bipartition, CorrelationOptions, CorrelationReport, EofEstimate,
    EofFormula,
};
pub use error::{Error, Result};
pub use layout::SiteLayout;
pub use lindblad::{
    decay_rate, expectation, integrate, lindblad_rhs, make_initial_state, voltage_and_current, InitialState,
    IntegrationOptions, MasterEquation, Observable, Trajectory,
};
pub use moments::{integrate_moments, moment_rhs, MomentState};
pub use observables::{form_factor, loop_area, loop_perimeter, segment_loops, HysteresisLoop, LoopRule, LoopSeries};
pub use state::DensityMatrix;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
