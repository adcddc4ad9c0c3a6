//! Dense many-body engine: brute-force oracle for small chains and the only
//! engine valid at nonzero anisotropy.
//!
//! States are full 2^T amplitude vectors over the spin basis (site 0 is the
//! most significant bit; bit value 1 means `|1>`, i.e. spin-down/occupied).
//! The Hamiltonian acts matrix-free; ground states come from restarted
//! Lanczos and time evolution from Krylov-subspace exponentials with an
//! a-posteriori error bound per substep.

mod dense_state;
mod hamiltonian;
mod krylov;
mod lanczos;

pub use dense_state::{
    basis_state, bus_overlap_fidelity, bus_window_fidelity, init_dense, reduced_two_qubit,
    DenseState,
};
pub use hamiltonian::{build_hamiltonian, bus_block_hamiltonian, ManyBodyHamiltonian, SITE_CAP};
pub use krylov::{evolve, evolve_ramped_generic, KrylovOptions};
pub use lanczos::{ground_state, LanczosOptions};
