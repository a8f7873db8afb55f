//! Correlation attack on an LFSR-keyed frame.
//!
//! Each slot's maximum-likelihood symbol estimate leaks its top bits, and
//! every keystream bit of a pure LFSR is a known GF(2) linear form of the
//! seed. The observed bits are therefore a noisy codeword of a linear code
//! whose message is the seed. Decoding is exhaustive maximum likelihood:
//! every seed is scored by the number of observed bits its forms predict
//! correctly, computed for all seeds at once with a Walsh–Hadamard transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttackReport, RankedSeed, SearchGuard};
use crate::constellation::{map_index, SystemParams};
use crate::error::{invalid, Error, Result};
use crate::keystream::{keystream_symbols, output_bit_forms, FilteredLfsr, KeyExpander, KeystreamSymbol, LfsrSpec, SeedKey};
use crate::measurement::{heterodyne_sample, QuadratureSample};
use crate::receiver::{draw_plaintext, encrypt_with_symbols, random_seed, PlaintextPolicy};
use crate::rng::stream;

const HARD_LIMIT_BITS: usize = 30;
const RANKING_LEN: usize = 10;

/// Likelihood-maximising symbol for one observation with known bit `x`:
/// the candidate angle closest to the outcome.
pub fn ml_symbol(sample: &QuadratureSample, x: bool, params: &SystemParams) -> Result<KeystreamSymbol> {
    let mut best = (f64::NEG_INFINITY, 0);
    for z in 0..params.big_m() {
        let l = map_index(x, KeystreamSymbol::new_unchecked(z), params)?;
        let theta = l.angle(params).radians();
        let score = sample.y1 * theta.cos() + sample.y2 * theta.sin();
        if score > best.0 {
            best = (score, z);
        }
    }
    params.symbol(best.1)
}

/// In-place Walsh–Hadamard transform (unnormalised).
fn walsh_hadamard(values: &mut [i32]) {
    let n = values.len();
    let mut h = 1;
    while h < n {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Runs the attack on heterodyne outcomes with known plaintext.
///
/// `msb_count` top bits of each symbol estimate are used. `truth`, when
/// given, is only used to grade the result.
pub fn correlation_attack(
    samples: &[QuadratureSample],
    known_plaintext: &[bool],
    spec: &LfsrSpec,
    params: &SystemParams,
    msb_count: u32,
    guard: SearchGuard,
    truth: Option<&SeedKey>,
) -> Result<AttackReport> {
    let key_bits = spec.length();
    guard.check(key_bits, HARD_LIMIT_BITS, "correlation attack")?;
    let m = params.bits_per_symbol()?;
    if msb_count == 0 || msb_count > m {
        return invalid(format!("msb_count must lie in [1, {m}], got {msb_count}"));
    }
    if samples.len() != known_plaintext.len() {
        return invalid("one known plaintext bit per observation is required");
    }
    let n = samples.len();
    let forms = output_bit_forms(spec, n * m as usize);

    // f[a] = Σ_j (-1)^{o_j} over observations whose form has mask a
    let mut spectrum = vec![0i32; 1 << key_bits];
    let mut observed = Vec::with_capacity(n * msb_count as usize);
    for (i, (y, &x)) in samples.iter().zip(known_plaintext).enumerate() {
        let z = ml_symbol(y, x, params)?.value();
        for k in 0..msb_count {
            let bit = z >> (m - 1 - k) & 1 == 1;
            let form = &forms[i * m as usize + k as usize];
            let mask = form.mask().expect("guarded length");
            spectrum[mask as usize] += if bit ^ form.constant() { -1 } else { 1 };
            observed.push((mask, bit));
        }
    }
    walsh_hadamard(&mut spectrum);
    let n_obs = observed.len() as i64;
    let score = |s: usize| ((n_obs + i64::from(spectrum[s])) / 2) as u64;

    let mut ranking: Vec<RankedSeed> = Vec::with_capacity(RANKING_LEN + 1);
    for seed in 0..spectrum.len() {
        let entry = RankedSeed { seed: seed as u64, score: score(seed) };
        if ranking.len() < RANKING_LEN || entry.score > ranking[ranking.len() - 1].score {
            let pos = ranking.partition_point(|r| r.score >= entry.score);
            ranking.insert(pos, entry);
            ranking.truncate(RANKING_LEN);
        }
    }

    let mut report = AttackReport::new("correlation_attack");
    report.param("key_bits", key_bits);
    report.param("taps", format!("{:?}", spec.taps()));
    report.param("M", params.big_m());
    report.param("S", params.energy());
    report.param("slots", n);
    report.param("msb_count", msb_count);
    report.work = spectrum.len() as u64;
    report.metrics.insert("observed_bits".into(), n_obs as f64);
    report.metrics.insert("best_score".into(), ranking[0].score as f64);
    report
        .error_rates
        .insert("estimated_bit_error".into(), 1.0 - ranking[0].score as f64 / n_obs.max(1) as f64);

    if let Some(truth) = truth {
        let value = truth
            .to_u64()
            .filter(|_| truth.len() == key_bits)
            .ok_or_else(|| Error::InvalidArgument("true seed does not match the LFSR".into()))?;
        let true_score = score(value as usize);
        let (mut above, mut tied) = (0u64, 0u64);
        for s in 0..spectrum.len() {
            let v = score(s);
            if v > true_score {
                above += 1;
            } else if v == true_score && s as u64 != value {
                tied += 1;
            }
        }
        report.success = above == 0 && tied == 0;
        report.metrics.insert("true_seed_rank".into(), (above + 1) as f64);
        report.metrics.insert("true_seed_ties".into(), tied as f64);
        report.metrics.insert("true_seed_score".into(), true_score as f64);
        report
            .error_rates
            .insert("true_seed_disagreement".into(), 1.0 - true_score as f64 / n_obs.max(1) as f64);
    }
    report.ranking = ranking;
    Ok(report)
}

/// Parameters of a repeated correlation-attack experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSetup {
    pub params: SystemParams,
    pub spec: LfsrSpec,
    /// Window of the nonlinear output filter; `None` for the bare LFSR.
    pub filter_window: Option<usize>,
    pub msb_count: u32,
    pub slots: usize,
    pub runs: u64,
    pub guard: SearchGuard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRun {
    pub run: u64,
    pub success: bool,
    pub true_seed_rank: u64,
    /// Fraction of used symbol bits the ML estimate got wrong.
    pub channel_bit_error: f64,
    /// Fraction of observed bits the true seed's linear forms fail to predict.
    pub true_seed_disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub runs: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_channel_bit_error: f64,
    pub mean_true_seed_disagreement: f64,
    pub per_run: Vec<CorrelationRun>,
}

/// Encrypts random plaintext under random seeds, lets Eve heterodyne every
/// slot, and runs [`correlation_attack`] against the LFSR model. With a
/// filter configured, Alice's keystream is filtered but Eve still decodes
/// with the LFSR's linear forms.
pub fn correlation_experiment(setup: &CorrelationSetup, master_seed: u64) -> Result<CorrelationSummary> {
    let params = &setup.params;
    let m = params.bits_per_symbol()?;
    let filtered = setup
        .filter_window
        .map(|w| FilteredLfsr::new(setup.spec.clone(), w))
        .transpose()?;
    let expander: &dyn KeyExpander = match &filtered {
        Some(f) => f,
        None => &setup.spec,
    };
    let per_run: Vec<CorrelationRun> = (0..setup.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream(master_seed, "eve-correlation", run);
            let seed = random_seed(setup.spec.length(), &mut rng)?;
            let symbols = keystream_symbols(expander, &seed, params.big_m(), setup.slots)?;
            let plaintext = draw_plaintext(PlaintextPolicy::Random, setup.slots, &mut rng);
            let frame = encrypt_with_symbols(&plaintext, &symbols, params)?;
            let samples: Vec<QuadratureSample> = frame
                .angles()
                .iter()
                .map(|&theta| heterodyne_sample(theta, params, &mut rng))
                .collect();
            let report = correlation_attack(&samples, &plaintext, &setup.spec, params, setup.msb_count, setup.guard, Some(&seed))?;
            let mut wrong = 0u64;
            for ((y, &x), z) in samples.iter().zip(&plaintext).zip(&symbols) {
                let est = ml_symbol(y, x, params)?.value();
                let diff = (est ^ z.value()) >> (m - setup.msb_count);
                wrong += u64::from(diff.count_ones());
            }
            Ok(CorrelationRun {
                run,
                success: report.success,
                true_seed_rank: report.metrics["true_seed_rank"] as u64,
                channel_bit_error: wrong as f64 / (setup.slots as f64 * f64::from(setup.msb_count)),
                true_seed_disagreement: report.error_rates["true_seed_disagreement"],
            })
        })
        .collect::<Result<_>>()?;
    let runs = setup.runs.max(1) as f64;
    let successes = per_run.iter().filter(|r| r.success).count() as u64;
    Ok(CorrelationSummary {
        runs: setup.runs,
        successes,
        success_rate: successes as f64 / runs,
        mean_channel_bit_error: per_run.iter().map(|r| r.channel_bit_error).sum::<f64>() / runs,
        mean_true_seed_disagreement: per_run.iter().map(|r| r.true_seed_disagreement).sum::<f64>() / runs,
        per_run,
    })
}
