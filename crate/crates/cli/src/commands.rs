//! One function per subcommand. Every random draw comes from
//! `stream(master_seed, tag, index)` with a fixed tag per subcommand.

use alphaeta::adversary::{
    bruteforce_experiment, complexity_estimate, correlation_experiment, eve_ciphertext_only_ber, gamma_analytic,
    gamma_empirical, BruteForceRow, CipherOnlyRule, Complexity, CorrelationSetup, CorrelationSummary, GammaEstimate,
    SearchGuard,
};
use alphaeta::constellation::{constellation_points, map_angle};
use alphaeta::dsr::{bob_penalty, dsr_scaling_experiment, DsrPolicy, DsrRow, DsrScalingSetup};
use alphaeta::jointattack::{build_gram, pe_vs_n, PeCurve, PeRow};
use alphaeta::keystream::{format_bits, keystream_symbols, parse_bits, SeedKey};
use alphaeta::receiver::{bob_ber_analytic, draw_plaintext, random_seed, roundtrip_ber, Keying, PlaintextPolicy};
use alphaeta::rng::stream;
use alphaeta::stats::BinomialEstimate;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::output::Sink;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    ConstellationDump,
    Keystream,
    Encrypt,
    BobBer,
    Gamma,
    EveCo,
    EveBruteforce,
    EveCorrelation,
    DsrSweep,
    JointSrm,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::ConstellationDump => "constellation-dump",
            Subcommand::Keystream => "keystream",
            Subcommand::Encrypt => "encrypt",
            Subcommand::BobBer => "bob-ber",
            Subcommand::Gamma => "gamma",
            Subcommand::EveCo => "eve-co",
            Subcommand::EveBruteforce => "eve-bruteforce",
            Subcommand::EveCorrelation => "eve-correlation",
            Subcommand::DsrSweep => "dsr-sweep",
            Subcommand::JointSrm => "joint-srm",
        }
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

/// Writes `rows` as CSV or JSON, and `report` as JSON alongside the CSV.
fn emit<T: Serialize, J: Serialize>(
    sink: &mut Sink,
    cmd: Subcommand,
    config: &ExperimentConfig,
    rows: &[T],
    report: Option<&J>,
) -> Result<(), CliError> {
    let stem = cmd.stem();
    match config.run.format {
        Format::Csv => {
            sink.csv(&format!("{stem}.csv"), rows)?;
            if let Some(report) = report {
                sink.json(&format!("{stem}_report.json"), report)?;
            }
        }
        Format::Json => match report {
            Some(report) => sink.json(&format!("{stem}.json"), &serde_json::json!({ "rows": rows, "report": report }))?,
            None => sink.json(&format!("{stem}.json"), rows)?,
        },
    }
    Ok(())
}

const NO_REPORT: Option<&()> = None;

pub fn run(cmd: Subcommand, config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    match cmd {
        Subcommand::ConstellationDump => constellation_dump(config, sink),
        Subcommand::Keystream => keystream(config, sink),
        Subcommand::Encrypt => encrypt(config, sink),
        Subcommand::BobBer => bob_ber(config, sink),
        Subcommand::Gamma => gamma(config, sink),
        Subcommand::EveCo => eve_co(config, sink),
        Subcommand::EveBruteforce => eve_bruteforce(config, sink),
        Subcommand::EveCorrelation => eve_correlation(config, sink),
        Subcommand::DsrSweep => dsr_sweep(config, sink),
        Subcommand::JointSrm => joint_srm(config, sink),
    }
}

fn constellation_dump(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    let rows = constellation_points(&config.params()?);
    emit(sink, Subcommand::ConstellationDump, config, &rows, NO_REPORT)
}

fn seed_key(config: &ExperimentConfig) -> Result<SeedKey, CliError> {
    match &config.expander.seed {
        Some(bits) => Ok(SeedKey::parse(bits)?),
        None => Ok(random_seed(config.expander.key_bits, &mut stream(config.run.master_seed, "cli-seed", 0))?),
    }
}

#[derive(Serialize)]
struct KeystreamRow {
    slot: usize,
    z: u32,
}

#[derive(Serialize)]
struct SeedReport {
    seed: String,
    key_bits: usize,
    taps: Vec<usize>,
    filter_window: Option<usize>,
}

fn seed_report(config: &ExperimentConfig, seed: &SeedKey) -> Result<SeedReport, CliError> {
    Ok(SeedReport {
        seed: format_bits(seed.bits()),
        key_bits: seed.len(),
        taps: config.spec()?.taps().to_vec(),
        filter_window: config.filter_window(),
    })
}

fn keystream(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    config.power_of_two("keystream")?;
    let seed = seed_key(config)?;
    let symbols = keystream_symbols(&*config.expander()?, &seed, config.system.big_m, config.attack.slots)?;
    let rows: Vec<KeystreamRow> = symbols
        .iter()
        .enumerate()
        .map(|(i, z)| KeystreamRow { slot: i + 1, z: z.value() })
        .collect();
    emit(sink, Subcommand::Keystream, config, &rows, Some(&seed_report(config, &seed)?))
}

#[derive(Serialize)]
struct EncryptRow {
    slot: usize,
    x: u8,
    z: u32,
    index: u32,
    angle_radians: f64,
}

fn encrypt(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    config.power_of_two("encrypt")?;
    let params = config.params()?;
    let seed = seed_key(config)?;
    let plaintext = match &config.run.plaintext {
        Some(bits) => parse_bits(bits)?,
        None => draw_plaintext(
            config.attack.plaintext,
            config.attack.slots,
            &mut stream(config.run.master_seed, "cli-plaintext", 0),
        ),
    };
    let symbols = keystream_symbols(&*config.expander()?, &seed, params.big_m(), plaintext.len())?;
    let rows = plaintext
        .iter()
        .zip(&symbols)
        .enumerate()
        .map(|(i, (&x, &z))| {
            let (theta, l) = map_angle(x, z, &params)?;
            Ok(EncryptRow {
                slot: i + 1,
                x: u8::from(x),
                z: z.value(),
                index: l.value(),
                angle_radians: theta.radians(),
            })
        })
        .collect::<Result<Vec<_>, alphaeta::Error>>()?;
    emit(sink, Subcommand::Encrypt, config, &rows, Some(&seed_report(config, &seed)?))
}

#[derive(Serialize)]
struct BerRow {
    #[serde(rename = "S")]
    energy: f64,
    #[serde(rename = "M")]
    big_m: u32,
    trials: u64,
    errors: u64,
    ber: f64,
    ci_low: f64,
    ci_high: f64,
}

#[derive(Serialize)]
struct BobReport {
    analytic_homodyne: f64,
    analytic_helstrom: f64,
    dsr_delta: f64,
    keying: &'static str,
}

fn bob_ber(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = config.params()?;
    let mut rng = stream(config.run.master_seed, "cli-bob-ber", 0);
    let expander = config.expander()?;
    let (est, keying): (BinomialEstimate, &'static str) = if config.dsr.delta > 0.0 {
        let policy = DsrPolicy::new(config.dsr.delta)?;
        (bob_penalty(&params, &policy, config.run.trials, &mut rng)?.with_dsr, "uniform")
    } else if params.bits_per_symbol().is_ok() {
        let est = roundtrip_ber(&params, Keying::Expander(&*expander), PlaintextPolicy::Random, config.run.trials, &mut rng)?;
        (est, "expander")
    } else {
        let est = roundtrip_ber(&params, Keying::Uniform, PlaintextPolicy::Random, config.run.trials, &mut rng)?;
        (est, "uniform")
    };
    let analytic = bob_ber_analytic(&params);
    let rows = [BerRow {
        energy: params.energy(),
        big_m: params.big_m(),
        trials: est.trials,
        errors: est.errors,
        ber: est.rate,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
    }];
    let report = BobReport {
        analytic_homodyne: analytic.homodyne,
        analytic_helstrom: analytic.helstrom,
        dsr_delta: config.dsr.delta,
        keying,
    };
    emit(sink, Subcommand::BobBer, config, &rows, Some(&report))
}

#[derive(Serialize)]
struct GammaRow {
    #[serde(rename = "M")]
    big_m: u32,
    #[serde(rename = "S")]
    energy: f64,
    width: f64,
    analytic: f64,
    empirical_mean: f64,
    std_err: f64,
    containment: f64,
    trials: u64,
}

fn gamma(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = config.params()?;
    let est: GammaEstimate = gamma_empirical(
        &params,
        config.width_policy()?,
        config.run.trials,
        &mut stream(config.run.master_seed, "cli-gamma", 0),
    )?;
    let rows = [GammaRow {
        big_m: params.big_m(),
        energy: params.energy(),
        width: est.width,
        analytic: gamma_analytic(&params)?,
        empirical_mean: est.mean,
        std_err: est.std_err,
        containment: est.containment,
        trials: est.trials,
    }];
    emit(sink, Subcommand::Gamma, config, &rows, Some(&est))
}

#[derive(Serialize)]
struct EveCoRow {
    #[serde(rename = "M")]
    big_m: u32,
    #[serde(rename = "S")]
    energy: f64,
    rule: CipherOnlyRule,
    trials: u64,
    errors: u64,
    ber: f64,
    ci_low: f64,
    ci_high: f64,
}

fn eve_co(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = config.params()?;
    let rule = config.attack.rule;
    let est = eve_ciphertext_only_ber(&params, rule, config.run.trials, &mut stream(config.run.master_seed, "cli-eve-co", 0))?;
    let rows = [EveCoRow {
        big_m: params.big_m(),
        energy: params.energy(),
        rule,
        trials: est.trials,
        errors: est.errors,
        ber: est.rate,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
    }];
    emit(sink, Subcommand::EveCo, config, &rows, Some(&est))
}

#[derive(Serialize)]
struct BruteForceReport<'a> {
    key_bits: usize,
    gamma_analytic: f64,
    complexity: Complexity,
    rows: &'a [BruteForceRow],
}

fn eve_bruteforce(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    config.power_of_two("eve-bruteforce")?;
    let params = config.params()?;
    let spec = config.spec()?;
    let rows = bruteforce_experiment(
        &params,
        &spec,
        config.width_policy()?,
        &config.attack.n_values,
        config.attack.runs,
        config.run.master_seed,
        config.guard(SearchGuard::BRUTEFORCE),
    )?;
    let gamma = gamma_analytic(&params)?;
    let report = BruteForceReport {
        key_bits: spec.length(),
        gamma_analytic: gamma,
        complexity: complexity_estimate(gamma, spec.length(), &params)?,
        rows: &rows,
    };
    emit(sink, Subcommand::EveBruteforce, config, &rows, Some(&report))
}

fn eve_correlation(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    config.power_of_two("eve-correlation")?;
    let setup = CorrelationSetup {
        params: config.params()?,
        spec: config.spec()?,
        filter_window: config.filter_window(),
        msb_count: config.attack.msb_count,
        slots: config.attack.slots,
        runs: config.attack.runs,
        guard: config.guard(SearchGuard::CORRELATION),
    };
    let summary: CorrelationSummary = correlation_experiment(&setup, config.run.master_seed)?;
    emit(sink, Subcommand::EveCorrelation, config, &summary.per_run, Some(&summary))
}

#[derive(Serialize)]
struct DsrCsvRow {
    #[serde(rename = "S")]
    energy: f64,
    #[serde(rename = "M")]
    big_m: u32,
    delta: f64,
    bob_ber: f64,
    bob_penalty: f64,
    eve_gamma: f64,
    bob_ber_without: f64,
    log10_analytic_penalty: f64,
    gamma_analytic: f64,
}

fn dsr_sweep(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    let setup = DsrScalingSetup {
        gamma_target: config.dsr.gamma_target,
        energies: config.dsr.energies.clone(),
        coupling: config.dsr.coupling,
        bob_trials: config.run.trials,
        eve_trials: config.dsr.eve_trials,
        width: config.width_policy()?,
    };
    let rows: Vec<DsrRow> = dsr_scaling_experiment(&setup, config.run.master_seed)?;
    let csv_rows: Vec<DsrCsvRow> = rows
        .iter()
        .map(|r| DsrCsvRow {
            energy: r.energy,
            big_m: r.big_m,
            delta: r.delta,
            bob_ber: r.bob_ber,
            bob_penalty: r.bob_penalty,
            eve_gamma: r.eve_gamma,
            bob_ber_without: r.bob_ber_without,
            log10_analytic_penalty: r.log10_analytic_penalty,
            gamma_analytic: r.gamma_analytic,
        })
        .collect();
    emit(sink, Subcommand::DsrSweep, config, &csv_rows, Some(&rows))
}

fn joint_srm(config: &ExperimentConfig, sink: &mut Sink) -> Result<(), CliError> {
    config.power_of_two("joint-srm")?;
    let params = config.params()?;
    let spec = config.spec()?;
    let guard = config.guard(SearchGuard::JOINT);
    let tag = "cli-joint-srm";
    let curve: PeCurve = pe_vs_n(
        &spec,
        &params,
        &config.attack.n_values,
        config.attack.plaintext,
        guard,
        &mut stream(config.run.master_seed, tag, 0),
    )?;
    let rows: Vec<PeRow> = curve.rows.clone();
    emit(sink, Subcommand::JointSrm, config, &rows, Some(&curve))?;
    if config.attack.gram_dump {
        let n = rows.last().map_or(0, |r| r.n);
        // same draw as inside pe_vs_n
        let plaintext = draw_plaintext(config.attack.plaintext, n, &mut stream(config.run.master_seed, tag, 0));
        let gram = build_gram(&plaintext, &spec, &params, guard)?;
        sink.binary("joint_srm_gram.bin", |w| gram.write_binary(w))?;
    }
    Ok(())
}
