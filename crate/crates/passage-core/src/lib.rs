//! Simulation and asymptotics of perpetuity first passage times.
//!
//! The perpetuity sequence Y_n = B_1 + A_1 B_2 + ⋯ + (A_1⋯A_{n-1}) B_n
//! driven by i.i.d. pairs (A, B) ⊂ (0,∞) × ℝ with E[log A] < 0 has a
//! stationary limit with a Kesten–Goldie power-law tail of index ξ, the
//! nonzero root of log E[A^ξ] = 0. This crate provides:
//!
//! - [`model`]: validated input laws of (A, B), sampling on deterministic
//!   RNG streams, standing-assumption checks, and the multiplicative
//!   scaling family used to realize the large-time drift regimes;
//! - [`cgf`]: generating functions, the root ξ, the concentration time
//!   ρ = 1/Λ'(ξ), tilt points α(τ), the rate function I(τ), and regime
//!   diagnostics;
//! - [`tilt`]: the exponential change of measure on log A with stopped
//!   likelihood ratios for importance sampling;
//! - [`process`]: one-pass simulation of the backward perpetuity and its
//!   maximum, the forward affine/reflected chains, first passage times,
//!   the dual risk process, and the pathwise time-reversal identity
//!   connecting them;
//! - [`estimators`]: crude/importance/enumeration estimates of passage
//!   and exceedance probabilities, tail-constant estimators, a power-law
//!   tail fit, the Petrov sharp approximation, an exponential Chebyshev
//!   bound, and regime-appropriate predictions.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration, and the CLI
//! live in the companion `passage-cli` crate.

#![no_std]
#![deny(unsafe_code)]
// Validation guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cgf;
pub mod error;
pub mod estimators;
pub mod model;
pub mod numerics;
pub mod process;
pub mod rng;
pub mod tilt;

pub use cgf::{AsymptoticSummary, CgfProfile, Regime, RegimeReport};
pub use error::{Error, Result};
pub use estimators::{Constants, Estimate, Executor, Method, SampleCfg, SeqExecutor};
pub use model::{AssumptionReport, LawSpec, PairLaw};
pub use process::{PassageOutcome, PathRecord};
pub use tilt::TiltedLaw;
