//! Assisted brute-force search: exhaustive seed enumeration constrained by
//! per-slot wedge sets.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wedge::{frame_wedges, WedgeSet, WidthPolicy};
use super::{AttackReport, SearchGuard, SURVIVOR_LIST_CAP};
use crate::constellation::SystemParams;
use crate::error::{invalid, Result};
use crate::keystream::{LfsrSpec, Register, SeedKey};
use crate::measurement::heterodyne_sample;
use crate::receiver::{draw_plaintext, encrypt, random_seed, PlaintextPolicy};
use crate::rng::stream;

const HARD_LIMIT_BITS: usize = 48;
const CHUNK: u64 = 1 << 12;

/// Per-slot membership bitmaps over `[0, M)`.
struct SlotFilter {
    slot: usize,
    words: Vec<u64>,
}

impl SlotFilter {
    #[inline]
    fn admits(&self, z: u32) -> bool {
        self.words[(z / 64) as usize] >> (z % 64) & 1 == 1
    }
}

#[derive(Default)]
struct ChunkTally {
    survivors: u64,
    listed: Vec<u64>,
    rejected: u64,
    slots_before_reject: u64,
}

/// Enumerates every seed and keeps those whose keystream symbol lies in the
/// wedge of every constrained slot.
pub fn assisted_bruteforce(
    wedges: &[WedgeSet],
    spec: &LfsrSpec,
    params: &SystemParams,
    guard: SearchGuard,
    truth: Option<&SeedKey>,
) -> Result<AttackReport> {
    let key_bits = spec.length();
    guard.check(key_bits, HARD_LIMIT_BITS, "assisted brute-force search")?;
    let m = params.bits_per_symbol()?;
    if wedges.windows(2).any(|w| w[0].slot >= w[1].slot) || wedges.first().is_some_and(|w| w.slot == 0) {
        return invalid("wedge slots must be 1-based and strictly increasing");
    }
    let words = (params.big_m() as usize).div_ceil(64);
    let filters: Vec<SlotFilter> = wedges
        .iter()
        .map(|w| {
            let mut bits = vec![0u64; words];
            for z in &w.candidates {
                bits[(z.value() / 64) as usize] |= 1 << (z.value() % 64);
            }
            SlotFilter { slot: w.slot, words: bits }
        })
        .collect();

    let space = 1u64 << key_bits;
    let tallies: Vec<ChunkTally> = (0..space.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut tally = ChunkTally::default();
            for seed in chunk * CHUNK..((chunk + 1) * CHUNK).min(space) {
                let mut reg = Register::new(spec, seed);
                let mut slot = 0;
                let mut checked = 0u64;
                let mut alive = true;
                for f in &filters {
                    while slot + 1 < f.slot {
                        reg.next_symbol(m);
                        slot += 1;
                    }
                    let z = reg.next_symbol(m);
                    slot += 1;
                    checked += 1;
                    if !f.admits(z) {
                        alive = false;
                        break;
                    }
                }
                if alive {
                    tally.survivors += 1;
                    if tally.listed.len() <= SURVIVOR_LIST_CAP {
                        tally.listed.push(seed);
                    }
                } else {
                    tally.rejected += 1;
                    tally.slots_before_reject += checked;
                }
            }
            tally
        })
        .collect();

    let mut report = AttackReport::new("assisted_bruteforce");
    report.param("key_bits", key_bits);
    report.param("taps", format!("{:?}", spec.taps()));
    report.param("M", params.big_m());
    report.param("S", params.energy());
    report.param("slots", wedges.len());
    report.work = space;
    let (mut rejected, mut slots_sum) = (0u64, 0u64);
    let mut listed = Vec::new();
    for t in tallies {
        report.surviving_seeds += t.survivors;
        rejected += t.rejected;
        slots_sum += t.slots_before_reject;
        listed.extend(t.listed);
    }
    let complete_list = report.surviving_seeds as usize <= SURVIVOR_LIST_CAP;
    if complete_list {
        report.survivors = listed;
    } else {
        report
            .notes
            .push(format!("{} survivors; list omitted above {SURVIVOR_LIST_CAP}", report.surviving_seeds));
    }
    report.metrics.insert(
        "avg_slots_before_reject".into(),
        if rejected == 0 { 0.0 } else { slots_sum as f64 / rejected as f64 },
    );
    report.metrics.insert(
        "mean_wedge_size".into(),
        if wedges.is_empty() {
            f64::from(params.big_m())
        } else {
            wedges.iter().map(WedgeSet::len).sum::<usize>() as f64 / wedges.len() as f64
        },
    );
    if complete_list {
        let last = wedges.last().map_or(0, |w| w.slot);
        let classes: HashSet<Vec<u32>> = report
            .survivors
            .iter()
            .map(|&seed| {
                let mut reg = Register::new(spec, seed);
                (0..last).map(|_| reg.next_symbol(m)).collect()
            })
            .collect();
        report.metrics.insert("keystream_classes".into(), classes.len() as f64);
        if classes.len() < report.survivors.len() {
            report.notes.push(format!(
                "{} survivors share {} distinct keystream prefixes; each seed is counted separately",
                report.survivors.len(),
                classes.len()
            ));
        }
    }
    if let Some(truth) = truth {
        let value = truth
            .to_u64()
            .filter(|_| truth.len() == key_bits)
            .ok_or_else(|| crate::Error::InvalidArgument("true seed does not match the LFSR".into()))?;
        report.success = seed_survives(value, &filters, spec, m);
        report.metrics.insert("true_seed_survives".into(), f64::from(u8::from(report.success)));
    }
    Ok(report)
}

fn seed_survives(seed: u64, filters: &[SlotFilter], spec: &LfsrSpec, m: u32) -> bool {
    let mut reg = Register::new(spec, seed);
    let mut slot = 0;
    filters.iter().all(|f| {
        while slot + 1 < f.slot {
            reg.next_symbol(m);
            slot += 1;
        }
        slot += 1;
        f.admits(reg.next_symbol(m))
    })
}

/// Search-cost inflation `C = Γ^{|K|/m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    /// `C` itself; `inf` when it exceeds the f64 range.
    pub value: f64,
    pub log10: f64,
    /// Γ below 1 was raised to 1.
    pub clamped: bool,
}

pub fn complexity_estimate(gamma: f64, key_bits: usize, params: &SystemParams) -> Result<Complexity> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return invalid(format!("Γ must be positive and finite, got {gamma}"));
    }
    let m = params.bits_per_symbol()?;
    let clamped = gamma < 1.0;
    let gamma = gamma.max(1.0);
    let log10 = key_bits as f64 / f64::from(m) * gamma.log10();
    Ok(Complexity {
        value: 10f64.powf(log10),
        log10,
        clamped,
    })
}

/// One row of the brute-force experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceRow {
    pub n: usize,
    pub runs: u64,
    pub mean_survivors: f64,
    pub true_survival_rate: f64,
    pub mean_wedge_size: f64,
    pub mean_slots_before_reject: f64,
}

/// Repeats the known-plaintext heterodyne attack `runs` times. Each run
/// draws one seed, plaintext and noise realisation for `max(n_values)` slots;
/// the search for each `n` uses the first `n` wedges of that run, so survivor
/// sets are nested across `n`.
pub fn bruteforce_experiment(
    params: &SystemParams,
    spec: &LfsrSpec,
    policy: WidthPolicy,
    n_values: &[usize],
    runs: u64,
    master_seed: u64,
    guard: SearchGuard,
) -> Result<Vec<BruteForceRow>> {
    guard.check(spec.length(), HARD_LIMIT_BITS, "assisted brute-force search")?;
    let width = policy.width(params)?;
    let n_max = n_values.iter().copied().max().unwrap_or(0);
    let per_run: Vec<Vec<AttackReport>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream(master_seed, "eve-bruteforce", run);
            let seed = random_seed(spec.length(), &mut rng)?;
            let plaintext = draw_plaintext(PlaintextPolicy::Random, n_max, &mut rng);
            let frame = encrypt(&plaintext, &seed, spec, params)?;
            let samples: Vec<_> = frame
                .angles()
                .iter()
                .map(|&theta| heterodyne_sample(theta, params, &mut rng))
                .collect();
            let wedges = frame_wedges(&samples, &plaintext, params, width)?;
            n_values
                .iter()
                .map(|&n| assisted_bruteforce(&wedges[..n], spec, params, guard, Some(&seed)))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(n_values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let reports: Vec<&AttackReport> = per_run.iter().map(|r| &r[k]).collect();
            let mean = |f: &dyn Fn(&AttackReport) -> f64| {
                reports.iter().map(|r| f(r)).sum::<f64>() / runs.max(1) as f64
            };
            BruteForceRow {
                n,
                runs,
                mean_survivors: mean(&|r| r.surviving_seeds as f64),
                true_survival_rate: mean(&|r| f64::from(u8::from(r.success))),
                mean_wedge_size: mean(&|r| r.metrics["mean_wedge_size"]),
                mean_slots_before_reject: mean(&|r| r.metrics["avg_slots_before_reject"]),
            }
        })
        .collect())
}
