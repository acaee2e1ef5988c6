//! Simulators for a spin-1/2 chain whose Hamiltonian combines three-body
//! cluster stabilizers, a magnetic field, and an Ising coupling:
//!
//! ```text
//!     H  =  - Σ_μ K_μ  -  Σ_μ (Bx σ^x_μ + Bz σ^z_μ)  -  J Σ_μ σ^z_μ σ^z_{μ+1}
//!     K_μ = σ^z_{μ-1} σ^x_μ σ^z_{μ+1}
//! ```
//!
//! At `J = Bx = Bz = 0` the ground state is the one-dimensional cluster
//! state. The crate provides several complementary ways of working with this
//! family of models:
//!
//! - [`oracle`] — dense state-vector simulation for small chains (N ≤ 14):
//!   exact ground states, measurement protocols, and reduced density
//!   matrices. Slow but assumption-free; everything else is tested against
//!   it.
//! - [`fermion`] — the exact solution for `Bz = 0` via a Jordan–Wigner map
//!   to free Majorana fermions: ground/sector energies, the spectral gap,
//!   string correlators (Pfaffians of the correlation matrix), block
//!   entanglement entropies, and the strong/weak coupling duality.
//! - [`mps`] — matrix product states: closed forms for the cluster and
//!   tilted-field states, expectation values and entropies on rings via
//!   transfer matrices, single-site measurements, and the measurement angle
//!   that maximizes information gain.
//! - [`vmps`] — variational ground-state search over open-chain MPS with a
//!   matrix product operator for `H`, used to produce translation-invariant
//!   ring states for large N.
//! - [`locent`] — Monte Carlo estimation of localizable entanglement between
//!   two sites of a ring under a measurement protocol, plus the
//!   characterization of the post-measurement two-qubit states.
//! - [`disentangle`] — pairwise measurements that disentangle the ends of a
//!   short chain, and the POVM built from the optimal measurement angles.
//!
//! Shared model types ([`ChainParams`], [`Boundary`], [`Pauli`],
//! [`PauliString`], [`Hamiltonian`]) live in [`chain`] and are re-exported
//! at the crate root.

pub mod chain;
pub mod disentangle;
pub mod fermion;
pub mod locent;
pub mod mps;
pub mod numutil;
pub mod oracle;
pub mod vmps;

pub use chain::{Boundary, ChainParams, Hamiltonian, Pauli, PauliString};
