//! Dynamical two-qubit entangling gates through uniform spin-chain buses.
//!
//! Two qubits A and B sit at the ends of an XX/XXZ chain of length `N`
//! (the bus). Switching on a boundary coupling `J0` close to
//! `1.05 J N^(-1/6)` makes the chain dynamics nearly mirror-inverting, so
//! after a time `t* ~ (0.25 N + 0.52 N^(1/3))/J` the qubit states are
//! swapped up to configuration-dependent phases. Those phases implement an
//! entangling gate `G|ab> = exp(i phi_ab)|ba>`.
//!
//! Two engines simulate the full many-body dynamics:
//!
//! * [`ffq`] — exact free-fermion engine for the isotropic (`lambda = 0`)
//!   chain at any size, built on Jordan-Wigner orbitals and Slater
//!   determinants;
//! * [`mbq`] — dense many-body engine (Lanczos ground states, Krylov
//!   propagation) valid for any anisotropy but limited to small chains.
//!
//! [`maps`] reconstructs the two-qubit process map from either engine and
//! evaluates average gate fidelity and concurrence; [`protocols`] wires
//! everything into the gate, repeated-use, gradual-switching, cut/glue and
//! anisotropy experiments.
//!
//! With the default `parallel` feature, independent evolutions (tomography
//! inputs, sweep points) run on a rayon pool; disabling it yields a fully
//! sequential build with identical results.

pub mod error;
pub mod exec;
pub mod model;

pub mod ffq;
pub mod maps;
pub mod mbq;
pub mod protocols;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix alias.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector alias.
pub type CVec = nalgebra::DVector<C64>;
/// Dense real matrix alias.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dense real vector alias.
pub type RVec = nalgebra::DVector<f64>;
