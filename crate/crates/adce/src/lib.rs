//! Simulation toolkit for the antidynamical Casimir effect (ADCE) in a
//! driven qutrit-cavity system.
//!
//! A three-level ladder atom couples to a single cavity mode through both
//! rotating and counter-rotating terms, and the atomic energies and coupling
//! strengths can be modulated with weak multi-tone drives. The crate provides
//! four layers:
//!
//! * [`hilbert`]: the truncated qutrit ⊗ Fock space, canonical orderings and
//!   Hamiltonian assembly.
//! * [`dressed`]: eigenstructure of the bare Hamiltonian per excitation
//!   subspace, numerically and in four closed-form regimes, plus the
//!   counter-rotating frequency corrections.
//! * [`rates`]: the perturbative transition-rate coefficients between
//!   dressed states induced by the modulation, and [`effective`]: the
//!   rotating-wave amplitude equations built from them.
//! * [`exact`]: brute-force propagation of the full time-dependent
//!   Schrodinger equation for thermal-ensemble initial states, the ground
//!   truth everything else is validated against.
//!
//! All frequencies and energies are expressed in units of the cavity
//! frequency `omega0 = 1`; times are in units of `1/omega0` unless a function
//! documents otherwise.

pub mod constraints;
pub mod dressed;
pub mod effective;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod hilbert;
pub mod modulation;
pub mod observables;
pub mod params;
pub mod rates;
pub mod thermal;

pub use error::{AdceError, Result};
pub use params::SystemParams;

/// Cavity angular frequency; the unit of every energy in the crate.
pub const OMEGA0: f64 = 1.0;
