//! Simulator and attack laboratory for the αη (Y-00) coherent-state stream
//! cipher.
//!
//! Alice expands a shared seed key into a running key, chops it into m-bit
//! symbols `Z_i` and sends each data bit `X_i` as a coherent state whose phase
//! is chosen by the mapper. Bob, knowing `Z_i`, makes a binary homodyne
//! decision. The crate simulates the exact Gaussian measurement statistics and
//! implements the individual-measurement attacks (wedge sets, assisted brute
//! force, correlation decoding), deliberate signal randomization, and the
//! square-root-measurement joint attack at desk scale.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod constellation;
pub mod dsr;
pub mod error;
pub mod jointattack;
pub mod keystream;
pub mod measurement;
pub mod receiver;
pub mod rng;
pub mod stats;

pub use constellation::{AngleIndex, PhaseAngle, SystemParams};
pub use error::{Error, Result};
pub use keystream::{FilteredLfsr, KeyExpander, KeystreamSymbol, LfsrSpec, SeedKey};
pub use measurement::QuadratureSample;
