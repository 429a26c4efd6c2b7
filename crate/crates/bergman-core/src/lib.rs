//! Numerical tools for Bergman kernels of generalized complex ellipsoids
//!
//! The domains studied here are
//!
//! ```text
//! E(m) = { z in C^n : |z_1|^(2 m_1) + ... + |z_n|^(2 m_n) < 1 },
//! ```
//!
//! circular Reinhardt domains on which the Bergman kernel has an explicit
//! monomial expansion.  The crate builds truncated kernel series with
//! certified tail bounds, applies and checks holomorphic maps between such
//! domains (including proper covering maps), computes Bergman projections by
//! quadrature, and searches the kernel for zeros on the diagonal-modulus
//! slice.
//!
//! Everything in this crate is `no_std` (with `alloc`) and deterministic:
//! reductions happen in a fixed order with compensated summation, so results
//! are bit-identical across runs and thread counts when driven externally.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ellipsoid;
pub mod error;
pub mod gamma;
pub mod gauss;
pub mod kahan;
pub mod kernel;
pub mod luqikeng;
pub mod projection;
pub mod simplex;
pub mod transforms;

pub use ellipsoid::{ComplexPoint, EllipsoidSpec, MultiIndex};
pub use error::{Error, Result};
pub use kernel::{EvalResult, KernelEvaluator, KernelSeries, TailEstimate};
pub use luqikeng::{SearchConfig, SearchReport, SearchStatus};
pub use transforms::HoloMap;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
