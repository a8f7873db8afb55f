//! Encryption, Bob's keyed homodyne receiver and bit-error-rate evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{map_index, pol, AngleIndex, PhaseAngle, SystemParams};
use crate::error::{invalid, Result};
use crate::keystream::{keystream_symbols, KeyExpander, KeystreamSymbol, SeedKey};
use crate::measurement::{helstrom_binary_error, homodyne_sample};
use crate::stats::{q_function, BinomialEstimate};

/// Transmitted phases, one per plaintext bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CipherFrame {
    angles: Vec<PhaseAngle>,
    /// Grid indices, present until the frame is randomized.
    grid: Option<Vec<AngleIndex>>,
}

impl CipherFrame {
    pub fn from_grid(indices: Vec<AngleIndex>, params: &SystemParams) -> Self {
        Self {
            angles: indices.iter().map(|l| l.angle(params)).collect(),
            grid: Some(indices),
        }
    }

    /// A frame whose angles are off the grid.
    pub fn off_grid(angles: Vec<PhaseAngle>) -> Self {
        Self { angles, grid: None }
    }

    pub fn angles(&self) -> &[PhaseAngle] {
        &self.angles
    }

    pub fn grid(&self) -> Option<&[AngleIndex]> {
        self.grid.as_deref()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

pub fn encrypt_with_symbols(
    plaintext: &[bool],
    symbols: &[KeystreamSymbol],
    params: &SystemParams,
) -> Result<CipherFrame> {
    if symbols.len() < plaintext.len() {
        return invalid(format!(
            "{} keystream symbols for {} plaintext bits",
            symbols.len(),
            plaintext.len()
        ));
    }
    let indices = plaintext
        .iter()
        .zip(symbols)
        .map(|(&x, &z)| map_index(x, z, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(CipherFrame::from_grid(indices, params))
}

pub fn encrypt(
    plaintext: &[bool],
    seed: &SeedKey,
    expander: &dyn KeyExpander,
    params: &SystemParams,
) -> Result<CipherFrame> {
    let symbols = keystream_symbols(expander, seed, params.big_m(), plaintext.len())?;
    encrypt_with_symbols(plaintext, &symbols, params)
}

/// Bob's local-oscillator phase for basis `z`: `zπ/M`.
pub fn bob_lo_angle(z: KeystreamSymbol, params: &SystemParams) -> PhaseAngle {
    PhaseAngle::new(f64::from(z.value()) * std::f64::consts::PI / f64::from(params.big_m()))
}

/// Sign decision on the homodyne outcome along basis `z`. A positive
/// outcome means the state sat at `zπ/M`, which carries bit `pol(z)`.
/// Zero resolves to `pol(z)`.
pub fn bob_decide(z: KeystreamSymbol, sample: f64, _params: &SystemParams) -> bool {
    if sample < 0.0 {
        !pol(z)
    } else {
        pol(z)
    }
}

/// Homodyne-measures every slot of `frame` along the keyed basis and decides.
pub fn bob_receive<R: Rng + ?Sized>(
    frame: &CipherFrame,
    symbols: &[KeystreamSymbol],
    params: &SystemParams,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if symbols.len() < frame.len() {
        return invalid("fewer keystream symbols than frame slots");
    }
    Ok(frame
        .angles()
        .iter()
        .zip(symbols)
        .map(|(&theta, &z)| {
            let y = homodyne_sample(theta, bob_lo_angle(z, params), params, rng);
            bob_decide(z, y, params)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBer {
    /// `Q(2√S)` for the homodyne receiver.
    pub homodyne: f64,
    /// Optimal binary discrimination error.
    pub helstrom: f64,
}

pub fn bob_ber_analytic(params: &SystemParams) -> AnalyticBer {
    AnalyticBer {
        homodyne: q_function(2.0 * params.alpha()),
        helstrom: helstrom_binary_error(params),
    }
}

/// Source of keystream symbols for Monte Carlo runs.
#[derive(Clone, Copy)]
pub enum Keying<'a> {
    /// Random seed per frame, expanded by the given expander.
    Expander(&'a dyn KeyExpander),
    /// Independent uniform symbols; usable for any `M`, including
    /// non-powers of two where no bit-level expander applies.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaintextPolicy {
    Random,
    AllZeros,
}

/// Slots encrypted under one random seed during Monte Carlo runs.
pub const FRAME_SLOTS: usize = 256;

pub fn random_seed<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<SeedKey> {
    SeedKey::new((0..len).map(|_| rng.random::<bool>()).collect())
}

pub(crate) fn draw_symbols<R: Rng + ?Sized>(
    keying: Keying<'_>,
    params: &SystemParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<KeystreamSymbol>> {
    match keying {
        Keying::Expander(expander) => {
            let seed = random_seed(expander.seed_len(), rng)?;
            keystream_symbols(expander, &seed, params.big_m(), n)
        }
        Keying::Uniform => Ok((0..n)
            .map(|_| KeystreamSymbol::new_unchecked(rng.random_range(0..params.big_m())))
            .collect()),
    }
}

pub fn draw_plaintext<R: Rng + ?Sized>(policy: PlaintextPolicy, n: usize, rng: &mut R) -> Vec<bool> {
    match policy {
        PlaintextPolicy::Random => (0..n).map(|_| rng.random()).collect(),
        PlaintextPolicy::AllZeros => vec![false; n],
    }
}

/// Full encrypt → channel → decrypt loop. `channel` may alter the frame
/// (e.g. randomize its phases); Bob's receiver is the same either way.
pub(crate) fn roundtrip_with_channel<R, F>(
    params: &SystemParams,
    keying: Keying<'_>,
    plaintext: PlaintextPolicy,
    n_trials: u64,
    rng: &mut R,
    mut channel: F,
) -> Result<BinomialEstimate>
where
    R: Rng + ?Sized,
    F: FnMut(CipherFrame, &mut R) -> Result<CipherFrame>,
{
    if n_trials == 0 {
        return invalid("need at least one trial");
    }
    let mut errors = 0u64;
    let mut remaining = n_trials;
    while remaining > 0 {
        let n = remaining.min(FRAME_SLOTS as u64) as usize;
        let symbols = draw_symbols(keying, params, n, rng)?;
        let bits = draw_plaintext(plaintext, n, rng);
        let frame = channel(encrypt_with_symbols(&bits, &symbols, params)?, rng)?;
        let decoded = bob_receive(&frame, &symbols, params, rng)?;
        errors += bits.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64;
        remaining -= n as u64;
    }
    Ok(BinomialEstimate::new(errors, n_trials))
}

/// Monte Carlo bit-error rate of Bob's receiver over `n_trials` slots.
pub fn roundtrip_ber<R: Rng + ?Sized>(
    params: &SystemParams,
    keying: Keying<'_>,
    plaintext: PlaintextPolicy,
    n_trials: u64,
    rng: &mut R,
) -> Result<BinomialEstimate> {
    roundtrip_with_channel(params, keying, plaintext, n_trials, rng, |f, _| Ok(f))
}
