//! Numerical core for the Aharonov–Bohm propagator with two magnetic vortices.
//!
//! The vortices sit at `a = (0, 0)` and `b = (ρ, 0)` after normalization.
//! The propagator is evaluated as a sum over alternating scattering words
//! (the closed formula, [`propagator::k_closed`]), and independently as a
//! winding-weighted sum of per-path simplex integrals on the universal cover
//! ([`propagator::k_schulman_truncated`]). The [`verify`] module bundles the
//! checks that tie the two together.
//!
//! The crate is `no_std` and needs `alloc`. Enabling the `std` feature only
//! switches floating-point math to the platform intrinsics.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod cover;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod propagator;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex amplitude type used for every kernel value.
pub type Amplitude = Complex64;
