//! Numerical laboratory for hidden-variable (ontological) models of a pair of
//! entangled qubits.
//!
//! The crate is organised bottom-up:
//!
//! - [`qm`]: exact quantum predictions for the state family
//!   `sin(θ/2)|00⟩ + cos(θ/2)|11⟩` with in-plane spin measurements, plus a
//!   brute-force density-matrix oracle.
//! - [`ontic`]: deterministic response models on the unit sphere (cap and belt
//!   supports), calibrated so that averaging over the uniform ontic
//!   distribution reproduces the quantum statistics.
//! - [`coarse`]: integration over the inaccessible azimuth, giving the effective
//!   predictions `f(τ)`, `g(τ)`, the conditional correlation `E(τ)`, the
//!   variance `δ` and the non-signaling / obstruction checks.
//! - [`chain`]: the chained-correlation quantity `Ω(a, n)` and its minimization
//!   over measurement chains, which upper-bounds `δ`.
//! - [`entropy`]: Rényi entropies, the averaged entropy of an outcome
//!   distribution and its minimization under fixed mean and variance.
//!
//! Supporting numerics live in [`quad`], [`sphere`], [`simplex`], [`lp`] and
//! [`rng`].

#![forbid(unsafe_code)]

pub mod chain;
pub mod coarse;
pub mod entropy;
pub mod error;
pub mod lp;
pub mod ontic;
pub mod qm;
pub mod quad;
pub mod rng;
pub mod simplex;
pub mod sphere;

pub use error::{Error, Result};

/// Library version recorded in serialized models and run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
