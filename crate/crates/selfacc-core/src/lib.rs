//! Self-accelerating wave solutions of the one-dimensional Schrodinger equation
//! with complex (gain/loss) potentials.
//!
//! Everything is organised around the comoving-frame construction: a real
//! envelope `psi(q)` in the uniformly accelerating frame `q = x - a t^2 / 2`,
//! together with an auxiliary current `G(q)`, determines a complex potential
//! `V_R + i V_I` under which the assembled lab-frame wave accelerates without
//! deforming. The crate provides the closed-form families, a synthesis path
//! from user envelopes, independent residual checks, two propagation schemes
//! on periodic grids, and the measurement tools used to compare them.

pub mod airy;
pub mod diagnostics;
pub mod error;
pub mod family;
pub mod field;
pub mod frame;
pub mod grid;
pub mod potential;
pub mod profiles;
pub mod propagator;
pub mod quad;
pub mod residual;
pub mod synth;

pub use error::CoreError;

/// Shorthand used throughout; matches the FFT backend's scalar type.
pub type C64 = num_complex::Complex64;
