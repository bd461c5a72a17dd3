//! Result records, metric/ledger tables, and file persistence.
//!
//! Each scenario produces one [`ResultRecord`] serialized three ways: a JSON
//! record (everything), a CSV metrics table (plot-ready), and a TOML copy of
//! the resolved config that produced it. All three carry the seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;

/// Format version of serialized records.
pub const ARTIFACT_VERSION: u32 = 1;

/// How a metric value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Evaluated from a formula exactly as printed in the source text.
    PaperFormula,
    /// Evaluated from the corrected form of such a formula.
    CorrectedFormula,
    MonteCarlo,
    ExactEnumeration,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PaperFormula => "paper-formula",
            Self::CorrectedFormula => "corrected-formula",
            Self::MonteCarlo => "monte-carlo",
            Self::ExactEnumeration => "exact-enumeration",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Standard error for Monte Carlo metrics; absent for exact values.
    pub std_error: Option<f64>,
    pub provenance: Provenance,
}

impl Metric {
    pub fn exact(name: impl Into<String>, value: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: None,
            provenance,
        }
    }

    pub fn monte_carlo(name: impl Into<String>, value: f64, std_error: f64) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: Some(std_error),
            provenance: Provenance::MonteCarlo,
        }
    }
}

/// One flagged discrepancy between the source text and the computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Short identifier of the discrepancy.
    pub quantity: String,
    /// What the source text claims, verbatim or paraphrased.
    pub paper_claim: String,
    /// Numeric value of the printed claim, when one can be evaluated.
    pub paper_value: Option<f64>,
    /// What this artifact computes.
    pub computed_value: f64,
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    pub artifact_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub config: HarnessConfig,
    pub metrics: Vec<Metric>,
    pub ledger: Vec<LedgerEntry>,
    pub duration_seconds: f64,
}

impl ResultRecord {
    pub fn new(scenario: impl Into<String>, config: &HarnessConfig) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION,
            scenario: scenario.into(),
            seed: config.seed,
            config: config.clone(),
            metrics: Vec::new(),
            ledger: Vec::new(),
            duration_seconds: 0.0,
        }
    }

    pub fn metrics_csv(&self) -> Result<String, String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["name", "value", "std_error", "provenance", "seed"])
            .map_err(|e| e.to_string())?;
        for m in &self.metrics {
            writer
                .write_record([
                    m.name.as_str(),
                    &format!("{:.17e}", m.value),
                    &m.std_error.map_or(String::new(), |s| format!("{s:.17e}")),
                    m.provenance.as_str(),
                    &self.seed.to_string(),
                ])
                .map_err(|e| e.to_string())?;
        }
        String::from_utf8(writer.into_inner().map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())
    }

    /// Write `<scenario>-record.json`, `<scenario>-metrics.csv`, and
    /// `<scenario>-config.toml` into `dir`; returns the paths written.
    pub fn persist(&self, dir: &Path) -> Result<Vec<PathBuf>, String> {
        let stem = self.scenario.as_str();
        let record_path = dir.join(format!("{stem}-record.json"));
        let csv_path = dir.join(format!("{stem}-metrics.csv"));
        let config_path = dir.join(format!("{stem}-config.toml"));
        let json = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        fs::write(&record_path, json).map_err(|e| e.to_string())?;
        fs::write(&csv_path, self.metrics_csv()?).map_err(|e| e.to_string())?;
        fs::write(&config_path, self.config.to_toml()).map_err(|e| e.to_string())?;
        Ok(vec![record_path, csv_path, config_path])
    }
}

/// Aggregated discrepancy report over a set of result records.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerReport {
    pub entries: Vec<LedgerEntry>,
}

/// Collect every ledger entry carried by the given records, in record order.
pub fn emit_ledger(records: &[ResultRecord]) -> LedgerReport {
    LedgerReport {
        entries: records.iter().flat_map(|r| r.ledger.clone()).collect(),
    }
}

impl LedgerReport {
    /// Human-readable table, one block per discrepancy.
    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return "discrepancy ledger: no entries\n".to_string();
        }
        let mut out = String::from("discrepancy ledger\n==================\n");
        for e in &self.entries {
            out.push_str(&format!("\n[{}]\n", e.quantity));
            out.push_str(&format!("  paper claim:    {}\n", e.paper_claim));
            match e.paper_value {
                Some(v) => out.push_str(&format!("  paper value:    {v:.6e}\n")),
                None => out.push_str("  paper value:    (not evaluable as printed)\n"),
            }
            out.push_str(&format!("  computed value: {:.6e}\n", e.computed_value));
            out.push_str(&format!("  verdict:        {}\n", e.verdict));
        }
        out
    }
}
