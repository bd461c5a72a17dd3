//! Versioned TOML configuration with hard unknown-key rejection.
//!
//! Every field that a scenario reads lives here with an explicit default, so
//! running without `--config` works; a config file overrides defaults, and
//! command-line flags override the file. Unknown keys anywhere in the file
//! are validation errors — silent typos in λ/μ or sample-count scans are the
//! main operational risk this guards against.

use serde::{Deserialize, Serialize};

/// Schema version this binary understands.
pub const CONFIG_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_threads() -> usize {
    4
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HarnessConfig {
    /// Mandatory in files; injected with the current version for defaults.
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub stats_verify: StatsVerifyConfig,
    #[serde(default)]
    pub concentration_table: ConcentrationTableConfig,
    #[serde(default)]
    pub algebra_demo: AlgebraDemoConfig,
    #[serde(default)]
    pub defend: DefendConfig,
    #[serde(default)]
    pub attack: AttackConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: default_seed(),
            threads: default_threads(),
            stats_verify: StatsVerifyConfig::default(),
            concentration_table: ConcentrationTableConfig::default(),
            algebra_demo: AlgebraDemoConfig::default(),
            defend: DefendConfig::default(),
            attack: AttackConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct StatsVerifyConfig {
    /// Hilbert-space dimension D of the Haar experiments.
    pub dimension: usize,
    /// Haar sample pairs for the Monte Carlo estimates.
    pub samples: u64,
    /// Proximity threshold v of the `Pr[b < v]` adjudication.
    pub proximity: f64,
    /// Adjudication tolerance around each candidate value.
    pub tolerance: f64,
}

impl Default for StatsVerifyConfig {
    fn default() -> Self {
        Self {
            dimension: 100,
            samples: 100_000,
            proximity: 0.95,
            tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConcentrationTableConfig {
    pub n: Vec<u64>,
    pub q: Vec<f64>,
    /// Target interval masses.
    pub mass: Vec<f64>,
}

impl Default for ConcentrationTableConfig {
    fn default() -> Self {
        Self {
            n: vec![1000],
            q: vec![0.5, 0.25, 1.0 / 3.0],
            mass: vec![1.0 - 1e-6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AlgebraDemoConfig {
    /// Cogits per hypervector.
    pub cogits: usize,
    /// Randomized recovery trials.
    pub trials: u64,
    /// Dictionary size for cleanup-based recovery.
    pub dictionary: usize,
}

impl Default for AlgebraDemoConfig {
    fn default() -> Self {
        Self {
            cogits: 1000,
            trials: 200,
            dictionary: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DefendConfig {
    /// Only the shipped subset-separation scenario exists today.
    pub scenario: DefendScenario,
}

impl Default for DefendConfig {
    fn default() -> Self {
        Self {
            scenario: DefendScenario::SubsetSeparation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefendScenario {
    SubsetSeparation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AttackConfig {
    pub scenario: AttackScenario,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            scenario: AttackScenario::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackScenario {
    Smoa,
    Dmoa,
    Both,
}

impl HarnessConfig {
    /// Parse a TOML config file; unknown keys are hard errors.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let config: Self =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Collect every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), String> {
        let mut violations = Vec::new();
        if self.version != CONFIG_VERSION {
            violations.push(format!(
                "version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.threads == 0 {
            violations.push("threads must be >= 1".into());
        }
        let sv = &self.stats_verify;
        if sv.dimension < 2 {
            violations.push("stats-verify.dimension must be >= 2".into());
        }
        if sv.samples == 0 {
            violations.push("stats-verify.samples must be >= 1".into());
        }
        if !(0.0 < sv.proximity && sv.proximity <= 1.0) {
            violations.push("stats-verify.proximity must lie in (0, 1]".into());
        }
        if !(sv.tolerance > 0.0) {
            violations.push("stats-verify.tolerance must be positive".into());
        }
        let ct = &self.concentration_table;
        if ct.n.is_empty() || ct.q.is_empty() || ct.mass.is_empty() {
            violations.push("concentration-table lists must be non-empty".into());
        }
        if ct.n.iter().any(|&n| n == 0) {
            violations.push("concentration-table.n entries must be >= 1".into());
        }
        if ct.q.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
            violations.push("concentration-table.q entries must lie in [0, 1]".into());
        }
        if ct.mass.iter().any(|&m| !(0.0 < m && m < 1.0)) {
            violations.push("concentration-table.mass entries must lie in (0, 1)".into());
        }
        let ad = &self.algebra_demo;
        if ad.cogits == 0 {
            violations.push("algebra-demo.cogits must be >= 1".into());
        }
        if ad.trials == 0 {
            violations.push("algebra-demo.trials must be >= 1".into());
        }
        if ad.dictionary < 2 {
            violations.push("algebra-demo.dictionary must be >= 2".into());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations.join("; "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_config() {
        let mut config = HarnessConfig::default();
        config.seed = 7;
        config.stats_verify.dimension = 16;
        config.concentration_table.q = vec![0.25];
        let parsed = HarnessConfig::from_toml(&config.to_toml()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        assert!(HarnessConfig::from_toml("version = 1\nlambdaa = 0.5\n").is_err());
        assert!(HarnessConfig::from_toml(
            "version = 1\n[stats-verify]\ndimension = 8\nsamplse = 10\n"
        )
        .is_err());
    }

    #[test]
    fn wrong_version_is_rejected() {
        assert!(HarnessConfig::from_toml("version = 2\n").is_err());
    }

    #[test]
    fn violations_are_aggregated() {
        let mut config = HarnessConfig::default();
        config.threads = 0;
        config.stats_verify.samples = 0;
        let err = config.validate().unwrap_err();
        assert!(err.contains("threads"));
        assert!(err.contains("samples"));
    }
}
