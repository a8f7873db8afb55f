//! Experiment configuration: TOML (or JSON) with five sections, plus
//! dotted `section.key=value` overrides from the command line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use alphaeta::adversary::{CipherOnlyRule, SearchGuard, WidthPolicy};
use alphaeta::dsr::DsrPolicy;
use alphaeta::keystream::{bits_per_symbol, FilteredLfsr, KeyExpander, LfsrSpec, SeedKey};
use alphaeta::receiver::PlaintextPolicy;
use alphaeta::SystemParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "M")]
    pub big_m: u32,
    #[serde(rename = "S")]
    pub energy: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            big_m: 2000,
            energy: 40_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpanderSection {
    pub key_bits: usize,
    /// Feedback taps; the built-in primitive polynomial when absent.
    pub taps: Option<Vec<usize>>,
    pub nonlinear_filter: bool,
    pub filter_window: usize,
    /// Seed bits, `s_0` first; drawn from the master seed when absent.
    pub seed: Option<String>,
}

impl Default for ExpanderSection {
    fn default() -> Self {
        Self {
            key_bits: 16,
            taps: None,
            nonlinear_filter: false,
            filter_window: 4,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthKind {
    Standard,
    Confidence,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub width_policy: WidthKind,
    /// Confidence level or fixed width, depending on `width_policy`.
    pub width_value: Option<f64>,
    pub rule: CipherOnlyRule,
    pub msb_count: u32,
    /// Data length for single-frame subcommands and the correlation attack.
    pub slots: usize,
    /// Data lengths for the brute-force and joint-attack curves.
    pub n_values: Vec<usize>,
    pub runs: u64,
    /// Overrides the per-attack default key-size guard.
    pub max_key_bits: Option<usize>,
    pub allow_override: bool,
    pub plaintext: PlaintextPolicy,
    pub gram_dump: bool,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            width_policy: WidthKind::Standard,
            width_value: None,
            rule: CipherOnlyRule::FullMl,
            msb_count: 1,
            slots: 256,
            n_values: vec![16, 32, 64],
            runs: 50,
            max_key_bits: None,
            allow_override: false,
            plaintext: PlaintextPolicy::Random,
            gram_dump: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsrSection {
    /// Fixed DSR width for `bob-ber`; 0 disables it.
    pub delta: f64,
    pub gamma_target: f64,
    pub energies: Vec<f64>,
    pub coupling: f64,
    pub eve_trials: u64,
}

impl Default for DsrSection {
    fn default() -> Self {
        Self {
            delta: 0.0,
            gamma_target: 3.0,
            energies: vec![1e2, 1e3, 1e4],
            coupling: alphaeta::dsr::DEFAULT_COUPLING,
            eve_trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub trials: u64,
    pub master_seed: u64,
    pub out: PathBuf,
    pub format: Format,
    /// Plaintext bits for `encrypt`; random when absent.
    pub plaintext: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: 100_000,
            master_seed: 1,
            out: PathBuf::from("results"),
            format: Format::Csv,
            plaintext: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub expander: ExpanderSection,
    pub attack: AttackSection,
    pub dsr: DsrSection,
    pub run: RunSection,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads a config file into a generic table; `.json` files are parsed as
/// JSON, everything else as TOML.
pub fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        drop_nulls(&mut value);
        serde_json::from_value(value).map_err(|e| config_error(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }
}

/// TOML has no null; a JSON null means "use the default".
fn drop_nulls(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|_, v| !v.is_null());
            map.values_mut().for_each(drop_nulls);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(drop_nulls),
        _ => {}
    }
}

/// Applies `section.key=value`; the value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("override '{assignment}' is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("override '{assignment}' has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_owned()));
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut node = table;
    for key in parents {
        node = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error(format!("override '{assignment}': '{key}' is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_error(format!("config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        SystemParams::new(self.system.big_m, self.system.energy).map_err(|e| config_error(format!("system: {e}")))
    }

    /// Load-time checks. Checks that depend on the subcommand (power-of-two
    /// `M`, key-size guards) run when the subcommand starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.spec()?;
        if self.expander.nonlinear_filter {
            FilteredLfsr::new(self.spec()?, self.expander.filter_window).map_err(|e| config_error(format!("expander.filter_window: {e}")))?;
        }
        if let Some(seed) = &self.expander.seed {
            let seed = SeedKey::parse(seed).map_err(|e| config_error(format!("expander.seed: {e}")))?;
            if seed.len() != self.expander.key_bits {
                return Err(config_error(format!(
                    "expander.seed has {} bits but expander.key_bits = {}",
                    seed.len(),
                    self.expander.key_bits
                )));
            }
        }
        let width = self.width_policy()?;
        if self.system.energy > 0.0 {
            width.width(&self.params()?).map_err(|e| config_error(format!("attack.width: {e}")))?;
        }
        if let Ok(m) = bits_per_symbol(self.system.big_m) {
            if self.attack.msb_count == 0 || self.attack.msb_count > m {
                return Err(config_error(format!("attack.msb_count must lie in [1, {m}] for M = {}", self.system.big_m)));
            }
        }
        if self.attack.runs == 0 {
            return Err(config_error("attack.runs must be positive"));
        }
        if self.run.trials == 0 {
            return Err(config_error("run.trials must be positive"));
        }
        DsrPolicy::new(self.dsr.delta).map_err(|e| config_error(format!("dsr.delta: {e}")))?;
        if !(self.dsr.gamma_target > 0.0) {
            return Err(config_error("dsr.gamma_target must be positive"));
        }
        if self.dsr.energies.iter().any(|&s| !(s > 0.0)) {
            return Err(config_error("dsr.energies must all be positive"));
        }
        if !(self.dsr.coupling >= 0.0) || self.dsr.energies.iter().any(|&s| self.dsr.coupling / s.sqrt() >= PI) {
            return Err(config_error("dsr.coupling must be non-negative with coupling/√S < π for every energy"));
        }
        if self.dsr.eve_trials == 0 {
            return Err(config_error("dsr.eve_trials must be positive"));
        }
        if let Some(pt) = &self.run.plaintext {
            alphaeta::keystream::parse_bits(pt).map_err(|e| config_error(format!("run.plaintext: {e}")))?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<LfsrSpec, CliError> {
        let e = &self.expander;
        match &e.taps {
            Some(taps) => LfsrSpec::new(e.key_bits, taps.iter().copied()),
            None => LfsrSpec::primitive(e.key_bits),
        }
        .map_err(|err| config_error(format!("expander: {err}")))
    }

    pub fn expander(&self) -> Result<Box<dyn KeyExpander>, CliError> {
        let spec = self.spec()?;
        if self.expander.nonlinear_filter {
            let f = FilteredLfsr::new(spec, self.expander.filter_window).map_err(|e| config_error(format!("expander: {e}")))?;
            Ok(Box::new(f))
        } else {
            Ok(Box::new(spec))
        }
    }

    pub fn filter_window(&self) -> Option<usize> {
        self.expander.nonlinear_filter.then_some(self.expander.filter_window)
    }

    pub fn width_policy(&self) -> Result<WidthPolicy, CliError> {
        let a = &self.attack;
        let need = |what: &str| a.width_value.ok_or_else(|| config_error(format!("attack.width_value is required for the {what} policy")));
        Ok(match a.width_policy {
            WidthKind::Standard => WidthPolicy::Standard,
            WidthKind::Confidence => WidthPolicy::Confidence(need("confidence")?),
            WidthKind::Fixed => WidthPolicy::Fixed(need("fixed")?),
        })
    }

    pub fn guard(&self, default: SearchGuard) -> SearchGuard {
        SearchGuard {
            max_key_bits: self.attack.max_key_bits.unwrap_or(default.max_key_bits),
            allow_override: self.attack.allow_override,
        }
    }

    pub fn power_of_two(&self, what: &str) -> Result<u32, CliError> {
        bits_per_symbol(self.system.big_m).map_err(|e| config_error(format!("{what} needs a power-of-two M: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "system.M=64").unwrap();
        apply_override(&mut t, "attack.width_policy=confidence").unwrap();
        apply_override(&mut t, "attack.width_value = 0.9999").unwrap();
        apply_override(&mut t, "dsr.energies=[100.0, 400.0]").unwrap();
        let c = ExperimentConfig::from_table(t).unwrap();
        assert_eq!(c.system.big_m, 64);
        assert_eq!(c.width_policy().unwrap(), WidthPolicy::Confidence(0.9999));
        assert_eq!(c.dsr.energies, vec![100.0, 400.0]);
    }

    #[test]
    fn bad_keys_are_reported() {
        let t: toml::Table = toml::from_str("[system]\nMM = 3\n").unwrap();
        let err = ExperimentConfig::from_table(t).unwrap_err().to_string();
        assert!(err.contains("MM"), "{err}");
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "nokey").is_err());
        apply_override(&mut t, "attack.width_policy=fixed").unwrap();
        assert!(ExperimentConfig::from_table(t).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.expander.taps = Some(vec![0, 2, 3, 5]);
        c.expander.seed = Some("1011001110001111".into());
        c.attack.width_policy = WidthKind::Confidence;
        c.attack.width_value = Some(0.99);
        let text = toml::to_string(&c).unwrap();
        let back = ExperimentConfig::from_table(toml::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
