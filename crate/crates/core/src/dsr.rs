//! Deliberate signal randomization: a fresh uniform phase offset on every
//! transmitted slot, unknown to both receivers.

use std::f64::consts::{LN_10, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::wedge::gamma_empirical_perturbed;
use crate::adversary::{gamma_analytic, GammaEstimate, WidthPolicy};
use crate::constellation::{PhaseAngle, SystemParams};
use crate::error::{invalid, Result};
use crate::receiver::{roundtrip_with_channel, CipherFrame, Keying, PlaintextPolicy};
use crate::rng::stream;
use crate::stats::{ln_q, log_sum_exp, q_function, simpson_rule, BinomialEstimate};

/// Coupling constant used when none is configured: `delta = 2/√S`, the
/// width of Eve's default wedge.
pub const DEFAULT_COUPLING: f64 = 2.0;

const QUADRATURE_PANELS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsrPolicy {
    /// Full width of the uniform offset, radians.
    pub delta: f64,
    /// `g` in `delta = g/√S`, when the width was derived from the energy.
    pub coupling: Option<f64>,
}

impl DsrPolicy {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..PI).contains(&delta) {
            return invalid(format!("DSR width must lie in [0, π), got {delta}"));
        }
        Ok(Self { delta, coupling: None })
    }

    /// `delta = g/√S`.
    pub fn coupled(g: f64, params: &SystemParams) -> Result<Self> {
        if !(g >= 0.0) || params.energy() <= 0.0 {
            return invalid(format!("coupled DSR needs g ≥ 0 and S > 0, got g = {g}, S = {}", params.energy()));
        }
        let mut policy = Self::new(g / params.alpha())?;
        policy.coupling = Some(g);
        Ok(policy)
    }

    pub fn none() -> Self {
        Self { delta: 0.0, coupling: None }
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.delta).map(|_| ())
    }

    fn offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.delta == 0.0 {
            0.0
        } else {
            (rng.random::<f64>() - 0.5) * self.delta
        }
    }
}

/// Shifts every angle by an independent offset uniform on
/// `[-delta/2, delta/2]`. The offsets are discarded; the output frame no
/// longer sits on the constellation grid.
pub fn dsr_apply<R: Rng + ?Sized>(frame: CipherFrame, policy: &DsrPolicy, rng: &mut R) -> Result<CipherFrame> {
    policy.validate()?;
    if policy.delta == 0.0 {
        return Ok(frame);
    }
    let angles = frame
        .angles()
        .iter()
        .map(|theta| PhaseAngle::new(theta.radians() + policy.offset(rng)))
        .collect();
    Ok(CipherFrame::off_grid(angles))
}

/// `E_ξ[Q(2√S cos ξ)]` for `ξ` uniform on `[-delta/2, delta/2]`, as a natural log.
pub fn ln_dsr_ber_analytic(params: &SystemParams, delta: f64) -> f64 {
    let a = 2.0 * params.alpha();
    if delta == 0.0 {
        return ln_q(a);
    }
    let terms = simpson_rule(-delta / 2.0, delta / 2.0, QUADRATURE_PANELS)
        .into_iter()
        .map(|(xi, w)| w.ln() + ln_q(a * xi.cos()));
    log_sum_exp(terms) - delta.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BobPenalty {
    pub with_dsr: BinomialEstimate,
    pub without_dsr: BinomialEstimate,
    /// Monte Carlo rate difference.
    pub penalty: f64,
    pub analytic_with: f64,
    pub analytic_without: f64,
    pub analytic_penalty: f64,
    /// `log10` of the analytic penalty; stays finite where the penalty
    /// itself underflows. `-inf` when `delta = 0`.
    pub log10_analytic_penalty: f64,
}

/// Bob's bit-error rate with and without DSR, through the unchanged
/// receiver path. Keystream symbols are uniform so any `M` is accepted.
pub fn bob_penalty<R: Rng + ?Sized>(
    params: &SystemParams,
    policy: &DsrPolicy,
    n_trials: u64,
    rng: &mut R,
) -> Result<BobPenalty> {
    policy.validate()?;
    let with_dsr = roundtrip_with_channel(params, Keying::Uniform, PlaintextPolicy::Random, n_trials, rng, |frame, r| {
        dsr_apply(frame, policy, r)
    })?;
    let without_dsr = roundtrip_with_channel(params, Keying::Uniform, PlaintextPolicy::Random, n_trials, rng, |frame, _| Ok(frame))?;

    let ln_with = ln_dsr_ber_analytic(params, policy.delta);
    let ln_without = ln_q(2.0 * params.alpha());
    let ln_penalty = if policy.delta == 0.0 || ln_with <= ln_without {
        f64::NEG_INFINITY
    } else {
        ln_with + (-(ln_without - ln_with).exp()).ln_1p()
    };
    Ok(BobPenalty {
        penalty: with_dsr.rate - without_dsr.rate,
        with_dsr,
        without_dsr,
        analytic_with: if policy.delta == 0.0 { q_function(2.0 * params.alpha()) } else { ln_with.exp() },
        analytic_without: q_function(2.0 * params.alpha()),
        analytic_penalty: ln_penalty.exp(),
        log10_analytic_penalty: ln_penalty / LN_10,
    })
}

/// Eve's mean wedge size when she measures DSR'd signals.
pub fn eve_gamma_with_dsr<R: Rng + ?Sized>(
    params: &SystemParams,
    policy: &DsrPolicy,
    width: WidthPolicy,
    trials: u64,
    rng: &mut R,
) -> Result<GammaEstimate> {
    policy.validate()?;
    gamma_empirical_perturbed(params, width, trials, rng, |theta, r| {
        PhaseAngle::new(theta.radians() + policy.offset(r))
    })
}

/// Power of two closest to `x` on a log scale, at least 2.
pub fn nearest_power_of_two(x: f64) -> Result<u32> {
    if !(x > 0.0) || x > f64::from(1u32 << 31) {
        return invalid(format!("cannot round {x} to a 32-bit power of two"));
    }
    Ok(1u32 << (x.log2().round().clamp(1.0, 31.0) as u32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsrRow {
    pub energy: f64,
    pub big_m: u32,
    pub delta: f64,
    pub bob_ber: f64,
    pub bob_ber_without: f64,
    pub bob_penalty: f64,
    pub analytic_penalty: f64,
    pub log10_analytic_penalty: f64,
    pub eve_gamma: f64,
    pub eve_gamma_std_err: f64,
    pub gamma_analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsrScalingSetup {
    pub gamma_target: f64,
    pub energies: Vec<f64>,
    /// `g` in `delta = g/√S`.
    pub coupling: f64,
    /// Bob's trials per row.
    pub bob_trials: u64,
    /// Eve's wedge trials per row.
    pub eve_trials: u64,
    pub width: WidthPolicy,
}

/// One row per energy: `M` is the power of two nearest `πΓ√S`, `delta`
/// follows the coupling rule.
pub fn dsr_scaling_experiment(setup: &DsrScalingSetup, master_seed: u64) -> Result<Vec<DsrRow>> {
    if !(setup.gamma_target > 0.0) {
        return invalid(format!("gamma target must be positive, got {}", setup.gamma_target));
    }
    setup
        .energies
        .iter()
        .enumerate()
        .map(|(row, &s)| {
            if !(s > 0.0) {
                return invalid(format!("energies must be positive, got {s}"));
            }
            let big_m = nearest_power_of_two(PI * setup.gamma_target * s.sqrt())?;
            let params = SystemParams::new(big_m, s)?;
            let policy = DsrPolicy::coupled(setup.coupling, &params)?;
            let bob = bob_penalty(&params, &policy, setup.bob_trials, &mut stream(master_seed, "dsr-bob", row as u64))?;
            let eve = eve_gamma_with_dsr(
                &params,
                &policy,
                setup.width,
                setup.eve_trials,
                &mut stream(master_seed, "dsr-eve", row as u64),
            )?;
            Ok(DsrRow {
                energy: s,
                big_m,
                delta: policy.delta,
                bob_ber: bob.with_dsr.rate,
                bob_ber_without: bob.without_dsr.rate,
                bob_penalty: bob.penalty,
                analytic_penalty: bob.analytic_penalty,
                log10_analytic_penalty: bob.log10_analytic_penalty,
                eve_gamma: eve.mean,
                eve_gamma_std_err: eve.std_err,
                gamma_analytic: gamma_analytic(&params)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::AngleIndex;

    fn frame(n: u32, p: &SystemParams) -> CipherFrame {
        CipherFrame::from_grid((0..n).map(|l| AngleIndex::new(l % p.grid_size(), p).unwrap()).collect(), p)
    }

    fn signed_offset(a: PhaseAngle, b: PhaseAngle) -> f64 {
        let d = (a.radians() - b.radians()).rem_euclid(std::f64::consts::TAU);
        if d > PI {
            d - std::f64::consts::TAU
        } else {
            d
        }
    }

    #[test]
    fn policy_bounds() {
        assert!(DsrPolicy::new(PI).is_err());
        assert!(DsrPolicy::new(-0.1).is_err());
        let p = SystemParams::new(16, 100.0).unwrap();
        let c = DsrPolicy::coupled(2.0, &p).unwrap();
        assert!((c.delta - 0.2).abs() < 1e-15);
        assert_eq!(c.coupling, Some(2.0));
        assert!(DsrPolicy::coupled(40.0, &p).is_err());
    }

    #[test]
    fn zero_width_is_identity() {
        let p = SystemParams::new(16, 4.0).unwrap();
        let f = frame(40, &p);
        let out = dsr_apply(f.clone(), &DsrPolicy::none(), &mut stream(1, "dsr-test", 0)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn offsets_stay_in_support() {
        let p = SystemParams::new(16, 4.0).unwrap();
        let f = frame(10_000, &p);
        let out = dsr_apply(f.clone(), &DsrPolicy::new(PI / 2.0).unwrap(), &mut stream(1, "dsr-test", 1)).unwrap();
        assert!(out.grid().is_none());
        for (a, b) in out.angles().iter().zip(f.angles()) {
            assert!(signed_offset(*a, *b).abs() <= PI / 4.0 + 1e-12);
        }
    }

    /// Kolmogorov–Smirnov against the uniform CDF; the 1% critical value for
    /// large n is 1.628/√n.
    #[test]
    fn offsets_are_uniform() {
        let p = SystemParams::new(16, 4.0).unwrap();
        let delta = 1.3;
        let f = frame(100_000, &p);
        let out = dsr_apply(f.clone(), &DsrPolicy::new(delta).unwrap(), &mut stream(1, "dsr-test", 2)).unwrap();
        let mut u: Vec<f64> = out
            .angles()
            .iter()
            .zip(f.angles())
            .map(|(a, b)| signed_offset(*a, *b) / delta + 0.5)
            .collect();
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        let d = u
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).max((i as f64 + 1.0) / n - x))
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }

    /// Midpoint rule on a fine grid as an independent quadrature.
    fn midpoint_reference(s: f64, delta: f64) -> f64 {
        let n = 200_000;
        let h = delta / n as f64;
        (0..n)
            .map(|k| q_function(2.0 * s.sqrt() * (-delta / 2.0 + (k as f64 + 0.5) * h).cos()))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn analytic_reference_matches_independent_quadrature() {
        for (s, delta) in [(1.0, PI / 2.0), (4.0, 2.5), (0.3, 0.1)] {
            let p = SystemParams::new(8, s).unwrap();
            let got = ln_dsr_ber_analytic(&p, delta).exp();
            let expect = midpoint_reference(s, delta);
            assert!((got - expect).abs() < 1e-9 * expect, "S={s} δ={delta}: {got} vs {expect}");
        }
    }

    #[test]
    fn monte_carlo_matches_quadrature_at_unit_energy() {
        let p = SystemParams::new(64, 1.0).unwrap();
        let policy = DsrPolicy::new(PI / 2.0).unwrap();
        let r = bob_penalty(&p, &policy, 100_000, &mut stream(2, "dsr-test", 0)).unwrap();
        assert!(r.with_dsr.agrees_with(r.analytic_with, 3.0), "{r:?}");
        assert!(r.without_dsr.agrees_with(q_function(2.0), 3.0), "{r:?}");
        assert!(r.analytic_penalty > 0.0);
    }

    #[test]
    fn zero_width_has_zero_penalty() {
        let p = SystemParams::new(16, 1.0).unwrap();
        let r = bob_penalty(&p, &DsrPolicy::none(), 10_000, &mut stream(3, "dsr-test", 0)).unwrap();
        assert_eq!(r.analytic_penalty, 0.0);
        assert_eq!(r.log10_analytic_penalty, f64::NEG_INFINITY);
        assert_eq!(r.analytic_with, r.analytic_without);
    }

    #[test]
    fn penalty_grows_with_width() {
        let p = SystemParams::new(16, 1.0).unwrap();
        let rates: Vec<f64> = [0.0, PI / 2.0, 0.9 * PI]
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                bob_penalty(&p, &DsrPolicy::new(d).unwrap(), 100_000, &mut stream(4, "dsr-trend", k as u64))
                    .unwrap()
                    .with_dsr
                    .rate
            })
            .collect();
        assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    }

    #[test]
    fn coupled_penalty_vanishes_with_energy() {
        let penalties: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&s| {
                let p = SystemParams::new(16, s).unwrap();
                let d = DsrPolicy::coupled(DEFAULT_COUPLING, &p).unwrap().delta;
                let ln = ln_dsr_ber_analytic(&p, d);
                let ln0 = ln_q(2.0 * p.alpha());
                ln + (-(ln0 - ln).exp()).ln_1p()
            })
            .collect();
        assert!(penalties.windows(2).all(|w| w[1] < w[0]), "{penalties:?}");
        assert!(penalties[3] < -1000.0);
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(nearest_power_of_two(94.2).unwrap(), 128);
        assert_eq!(nearest_power_of_two(298.0).unwrap(), 256);
        assert_eq!(nearest_power_of_two(942.5).unwrap(), 1024);
        assert_eq!(nearest_power_of_two(0.3).unwrap(), 2);
        assert!(nearest_power_of_two(0.0).is_err());
    }

    #[test]
    fn without_dsr_eve_sees_baseline_gamma() {
        let p = SystemParams::new(2000, 40_000.0).unwrap();
        let est = eve_gamma_with_dsr(&p, &DsrPolicy::none(), WidthPolicy::Standard, 5_000, &mut stream(5, "dsr-test", 0)).unwrap();
        let base = crate::adversary::gamma_empirical(&p, WidthPolicy::Standard, 5_000, &mut stream(5, "dsr-test", 0)).unwrap();
        assert_eq!(est, base);
    }
}
