//! Deterministic building blocks for linear kinetic relaxation models on the
//! unit slab.
//!
//! The crate discretizes distribution densities `f(t, x, v)` on
//! `(0,1) x [-V_max, V_max]` measured against `e^{-phi(x)} mu(v) dx dv`, where
//! `mu` is the unit Gaussian. It provides:
//!
//! - offset-symmetric velocity quadrature and weighted measures ([`grids`]),
//! - macro/micro field decompositions ([`fields`]),
//! - BGK and Fokker-Planck collision operators with implicit solves
//!   ([`collision`]),
//! - Maxwell-type accommodation wall laws and the exact discrete boundary
//!   identities they satisfy ([`boundary`]),
//! - a well-balanced upwind phase-space transport step and the IMEX driver
//!   ([`transport`]),
//! - the Robin-closed auxiliary elliptic solve and its summation-by-parts
//!   identities ([`elliptic`]),
//! - drift-diffusion and relaxation-layer references for the small-parameter
//!   limit ([`asymptotics`]),
//! - trajectory records, entropy functionals, and decay-rate fitting
//!   ([`diagnostics`]).
//!
//! Everything is allocation-only (`no_std` + `alloc`); float transcendentals
//! go through `libm` so results are bitwise reproducible across platforms.
//! All iteration orders are fixed: identical inputs give identical outputs.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod asymptotics;
pub mod boundary;
pub mod collision;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod grids;
pub mod transport;
pub(crate) mod tridiag;

pub use error::{CoreError, Result};
