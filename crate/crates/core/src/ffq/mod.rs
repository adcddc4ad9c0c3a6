//! Free-fermion engine: exact isotropic (`lambda = 0`) dynamics at any
//! chain size.
//!
//! Jordan-Wigner maps the XX chain to free fermions, so every computational
//! basis state with a bus eigenstate evolves as a Slater determinant and a
//! general two-qubit input as a superposition of at most four determinants.
//! All observables reduce to determinants of small overlap matrices:
//! qubit operators become operator words (ladder operators plus string
//! gauges) absorbed into augmented orbital matrices.

mod single_particle;
mod slater;
mod state;
mod words;

pub use single_particle::{
    build_single_particle, eigensystem, schedule_propagator, transfer_amplitude,
    SingleParticleEigensystem, SingleParticleHamiltonian, StaticPropagator, STEP_TOL,
};
pub use slater::{apply_gauge, SlaterDeterminant};
pub use state::{
    block_ground_fidelity, bus_ground_state, bus_ground_state_with, config_transition_tensor,
    contract_rdm, init_state, lattice_ground_state, propagate_orbitals, two_qubit_rdm,
    whole_chain_overlap, window_occupation, BusState, FermionicSuperposition, ZeroModePolicy,
};
pub use state::bus_fidelity;
pub use words::{parity_word, qubit_transition_words, sd_matrix_element, Primitive, Word};
