//! Eve's individual-measurement attacks.
//!
//! - [`wedge`]: Γ, the known-plaintext wedge sets, and Γ estimation.
//! - [`search`]: assisted brute-force seed search and its complexity.
//! - [`cipher_only`]: per-slot bit guessing without the key.
//! - [`correlation`]: linear (correlation) decoding of an LFSR seed.

pub mod cipher_only;
pub mod correlation;
pub mod search;
pub mod wedge;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cipher_only::{eve_ciphertext_only_ber, eve_ciphertext_only_bit, CipherOnlyRule};
pub use correlation::{correlation_attack, correlation_experiment, CorrelationSetup, CorrelationSummary};
pub use search::{
    assisted_bruteforce, bruteforce_experiment, complexity_estimate, BruteForceRow, Complexity,
};
pub use wedge::{
    gamma_analytic, gamma_empirical, wedge_candidates, GammaEstimate, WedgeSet, WidthPolicy,
};

/// Key-size limit for exhaustive seed enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchGuard {
    pub max_key_bits: usize,
    /// Lifts `max_key_bits` up to the hard limit of the routine.
    pub allow_override: bool,
}

impl SearchGuard {
    pub const BRUTEFORCE: Self = Self {
        max_key_bits: 28,
        allow_override: false,
    };
    pub const CORRELATION: Self = Self {
        max_key_bits: 24,
        allow_override: false,
    };
    /// Dense `2^|K|`-square Gram matrices.
    pub const JOINT: Self = Self {
        max_key_bits: 12,
        allow_override: false,
    };

    pub(crate) fn check(&self, key_bits: usize, hard_limit: usize, what: &str) -> Result<()> {
        if key_bits > hard_limit {
            return Err(Error::Guard(format!(
                "{what}: |K| = {key_bits} exceeds the hard limit of {hard_limit} bits"
            )));
        }
        if key_bits > self.max_key_bits && !self.allow_override {
            return Err(Error::Guard(format!(
                "{what}: |K| = {key_bits} exceeds the guard of {} bits; set the override flag to run it anyway",
                self.max_key_bits
            )));
        }
        Ok(())
    }
}

/// A seed and its decoding score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSeed {
    /// Seed bits packed as an integer, bit `j` = `s_j`.
    pub seed: u64,
    pub score: u64,
}

/// Outcome of one attack run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub parameters: BTreeMap<String, String>,
    pub surviving_seeds: u64,
    /// Survivors listed in full when there are at most [`SURVIVOR_LIST_CAP`].
    pub survivors: Vec<u64>,
    pub success: bool,
    /// Number of seed trials performed.
    pub work: u64,
    pub error_rates: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub ranking: Vec<RankedSeed>,
    pub notes: Vec<String>,
}

pub const SURVIVOR_LIST_CAP: usize = 1024;

impl AttackReport {
    pub(crate) fn new(attack: &str) -> Self {
        Self {
            attack: attack.to_owned(),
            ..Self::default()
        }
    }

    pub(crate) fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_owned(), value.to_string());
    }
}
