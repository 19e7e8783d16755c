//! Qubit–mode entanglement witness for pure-dephasing evolutions.
//!
//! A qubit couples to a single bosonic mode through
//! `H = σz ⊗ (α a† + α* a + β a†a + γ)`. Because both conditional
//! evolutions `w±(t) = exp(∓iVt)` are generated by the same operator they
//! commute, and the usual qubit-only entanglement witnesses stay silent. This
//! crate implements the tunable-interaction protocol that switches the
//! coupling between a preparation and a measurement phase, reads the
//! environment's conditional states back through qubit coherence, and
//! cross-checks the result against the exact separability criterion and the
//! PPT negativity of the joint state.
//!
//! Layout:
//!
//! - [`fock`]: dense operators on a truncated Fock space, Hermitian
//!   exponentials, trace distance, partial transpose and negativity.
//! - [`model`]: the interaction operator, conditional evolutions (spectral
//!   and displacement-factored), thermal states.
//! - [`cutoff`]: adaptive choice of the Fock truncation.
//! - [`protocol`]: the preparation/measurement circuit, witness curves,
//!   separability gap, joint-state negativity and verdicts.
//!
//! Units: `ħ = 1`; times are dimensionless `βt`.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cutoff;
pub mod error;
pub mod fock;
pub mod model;
pub mod protocol;

pub use nalgebra;

pub use cutoff::{choose_cutoff, CutoffChoice, CutoffPolicy};
pub use error::{Error, Result};
pub use fock::{DensityOperator, HermitianSpectrum, JointState, Operator};
pub use model::{Branch, ConditionalDynamics, PdParams, ThermalSpec};
pub use protocol::{
    ProtocolConfig, WitnessCurve, WitnessVerdict, DEFAULT_TAU_POINTS, DEFAULT_WITNESS_THRESHOLD,
};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;
