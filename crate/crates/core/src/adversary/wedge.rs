//! Known-plaintext wedge sets and the random-cipher ambiguity Γ.
//!
//! With the data bit known, the `M` keystream symbols place the signal on
//! `M` angles spaced `2π/M` apart (two half-circles, offset at the seams).
//! A wedge of full width `w` around Eve's phase estimate therefore holds
//! `M·w/(2π)` candidates on average; the default `w = 2/√S` gives
//! `Γ = M/(π√S)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{bit_at_index, map_angle, AngleIndex, PhaseAngle, SystemParams};
use crate::error::{invalid, Result};
use crate::keystream::KeystreamSymbol;
use crate::measurement::{angular_distance, heterodyne_sample, phase_estimate, QuadratureSample};
use crate::stats::two_sided_quantile;

/// `Γ = M/(π√S)`.
pub fn gamma_analytic(params: &SystemParams) -> Result<f64> {
    if params.energy() <= 0.0 {
        return invalid("Γ needs S > 0");
    }
    Ok(f64::from(params.big_m()) / (PI * params.alpha()))
}

/// How wide a wedge Eve draws around her phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum WidthPolicy {
    /// Full width `2/√S`.
    Standard,
    /// Full width `2·z_p/√(2S)`, with `z_p` the two-sided Gaussian
    /// quantile, so the true symbol falls inside with probability about
    /// `p` (phase noise taken as Gaussian with std `1/√(2S)`).
    Confidence(f64),
    /// Explicit full width in radians.
    Fixed(f64),
}

impl WidthPolicy {
    pub fn width(&self, params: &SystemParams) -> Result<f64> {
        let s = params.energy();
        let w = match *self {
            WidthPolicy::Standard => {
                if s <= 0.0 {
                    return invalid("default wedge width needs S > 0");
                }
                2.0 / s.sqrt()
            }
            WidthPolicy::Confidence(p) => {
                if !(p > 0.0 && p < 1.0) {
                    return invalid(format!("confidence level must lie in (0, 1), got {p}"));
                }
                if s <= 0.0 {
                    return invalid("confidence wedge width needs S > 0");
                }
                2.0 * two_sided_quantile(p) / (2.0 * s).sqrt()
            }
            WidthPolicy::Fixed(w) => w,
        };
        if !(w > 0.0) {
            return invalid(format!("wedge width must be positive, got {w}"));
        }
        Ok(w)
    }
}

/// Keystream symbols compatible with one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeSet {
    /// 1-based slot index.
    pub slot: usize,
    /// Sorted candidate symbols.
    pub candidates: Vec<KeystreamSymbol>,
    pub width_radians: f64,
}

impl WedgeSet {
    pub fn contains(&self, z: KeystreamSymbol) -> bool {
        self.candidates.binary_search(&z).is_ok()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The unconstrained wedge `[0, M)`.
    pub fn full(slot: usize, params: &SystemParams) -> Self {
        Self {
            slot,
            candidates: (0..params.big_m()).map(KeystreamSymbol::new_unchecked).collect(),
            width_radians: TAU,
        }
    }
}

/// `{z : dist(θ(x, z), φ̂) ≤ width/2}` for the observation in `slot`.
pub fn wedge_candidates(
    slot: usize,
    sample: &QuadratureSample,
    known_x: bool,
    params: &SystemParams,
    width: f64,
) -> Result<WedgeSet> {
    if !(width > 0.0) {
        return invalid(format!("wedge width must be positive, got {width}"));
    }
    let phase = phase_estimate(sample)?;
    let half = width / 2.0;
    let big_m = params.big_m();
    let grid = i64::from(params.grid_size());
    let step = PI / f64::from(big_m);
    let lo = ((phase.radians() - half) / step).floor() as i64 - 1;
    let hi = ((phase.radians() + half) / step).ceil() as i64 + 1;
    let range: Box<dyn Iterator<Item = i64>> = if hi - lo + 1 >= grid {
        Box::new(0..grid)
    } else {
        Box::new(lo..=hi)
    };
    let mut candidates: Vec<KeystreamSymbol> = range
        .map(|k| AngleIndex::new_unchecked(k.rem_euclid(grid) as u32))
        .filter(|&l| bit_at_index(l, params) == known_x)
        .filter(|&l| angular_distance(l.angle(params), phase) <= half)
        .map(|l| KeystreamSymbol::new_unchecked(l.value() % big_m))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    Ok(WedgeSet {
        slot,
        candidates,
        width_radians: width,
    })
}

/// Monte Carlo wedge statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub trials: u64,
    pub width: f64,
    /// Mean wedge size.
    pub mean: f64,
    pub std: f64,
    pub std_err: f64,
    /// Fraction of trials whose wedge held the true symbol.
    pub containment: f64,
}

impl GammaEstimate {
    pub(crate) fn from_counts(width: f64, counts: &[usize], contained: u64) -> Self {
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / n;
        let var = if counts.len() > 1 {
            counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            trials: counts.len() as u64,
            width,
            mean,
            std: var.sqrt(),
            std_err: (var / n).sqrt(),
            containment: contained as f64 / n,
        }
    }
}

/// Mean wedge size with uniformly random true symbol and known bit.
pub fn gamma_empirical<R: Rng + ?Sized>(
    params: &SystemParams,
    policy: WidthPolicy,
    trials: u64,
    rng: &mut R,
) -> Result<GammaEstimate> {
    gamma_empirical_perturbed(params, policy, trials, rng, |theta, _| theta)
}

/// [`gamma_empirical`] with a transmitter-side phase perturbation applied
/// before Eve's measurement.
pub(crate) fn gamma_empirical_perturbed<R, F>(
    params: &SystemParams,
    policy: WidthPolicy,
    trials: u64,
    rng: &mut R,
    mut perturb: F,
) -> Result<GammaEstimate>
where
    R: Rng + ?Sized,
    F: FnMut(PhaseAngle, &mut R) -> PhaseAngle,
{
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let width = policy.width(params)?;
    let mut counts = Vec::with_capacity(trials as usize);
    let mut contained = 0;
    for _ in 0..trials {
        let z = params.symbol(rng.random_range(0..params.big_m()))?;
        let x: bool = rng.random();
        let (theta, _) = map_angle(x, z, params)?;
        let theta = perturb(theta, rng);
        let y = heterodyne_sample(theta, params, rng);
        let wedge = wedge_candidates(1, &y, x, params, width)?;
        contained += u64::from(wedge.contains(z));
        counts.push(wedge.len());
    }
    Ok(GammaEstimate::from_counts(width, &counts, contained))
}

/// Wedges for a whole frame of observations with known plaintext.
pub fn frame_wedges(
    samples: &[QuadratureSample],
    plaintext: &[bool],
    params: &SystemParams,
    width: f64,
) -> Result<Vec<WedgeSet>> {
    if samples.len() != plaintext.len() {
        return invalid("one known plaintext bit per observation is required");
    }
    samples
        .iter()
        .zip(plaintext)
        .enumerate()
        .map(|(i, (y, &x))| wedge_candidates(i + 1, y, x, params, width))
        .collect()
}
