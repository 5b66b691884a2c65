//! Nonlinear Schrödinger dynamics on two- and four-dimensional Hilbert spaces.
//!
//! The state vector obeys
//!
//! ```text
//! d|ψ⟩/dt = (−i H + γ_D M_D) |ψ⟩
//! ```
//!
//! where `H` is given in angular-frequency units (ℏ = 1 everywhere) and `M_D`
//! is a state-dependent Hermitian operator built from a target vector `|Ψ⟩`.
//! The nonlinear term leaves the norm invariant (`⟨ψ|M_D|ψ⟩ = 0`) while pulling
//! the state away from `|Ψ⟩`.
//!
//! Modules:
//! - [`linalg`]: fixed-size dense complex vectors and matrices, Pauli and
//!   Kronecker helpers, projectors, partial transposes.
//! - [`dynamics`]: `M_D`, the modified Schrödinger/master/Heisenberg
//!   right-hand sides, and a fixed-step RK4 integrator.
//! - [`bloch`]: one-spin reduced dynamics on the Bloch sphere and the
//!   associated fixed-point and thermal-equilibrium formulas.
//! - [`noise`]: colored Gaussian field fluctuations with exponential
//!   autocorrelation, synthesized spectrally.
//! - [`two_spin`]: two-spin observables, entanglement, the spin-flip target
//!   and Bell-state perturbation runs.
//! - [`driven`]: rotating-frame Hamiltonian of a slow spin coupled to a driven
//!   spin.
//! - [`limit_cycle`]: sustained-oscillation detection on sampled series.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bloch;
pub mod driven;
pub mod dynamics;
mod error;
pub mod fft;
pub mod limit_cycle;
pub mod linalg;
pub mod noise;
pub mod ode;
pub mod two_spin;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Tolerance for exact algebraic identities (hermiticity, normalization,
/// expectation-value residues).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Tolerance for quantities that accumulate integration error.
pub const DYNAMICAL_TOL: f64 = 1e-8;

/// Default threshold on `1 − ⟨P⟩` below which `M_D` is replaced by zero.
pub const DEFAULT_GUARD_EPS: f64 = 1e-12;
