//! Serialized forms of a run: the versioned JSON report and bench CSV rows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::engine::{
    accounting_check, AccountingCheck, LevelMissRate, LevelStats, MiningConfig, MiningReport, OracleDiff, PhaseTimings,
    Variant,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "lshmine-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemsetEntry {
    pub items: Vec<ItemId>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAccounting {
    pub level: usize,
    #[serde(flatten)]
    pub check: AccountingCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(flatten)]
    pub diff: OracleDiff,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miss_rates: Option<Vec<LevelMissRate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub config: MiningConfig,
    pub n: usize,
    pub m: usize,
    pub theta_count: usize,
    pub transactions_read: u64,
    pub levels: Vec<LevelStats>,
    /// Sorted by size, then by item list.
    pub itemsets: Vec<ItemsetEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accounting: Option<Vec<LevelAccounting>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    /// Only present when requested; everything else is seed-deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<PhaseTimings>>,
}

impl ReportDocument {
    pub fn new(report: &MiningReport, with_timings: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config: report.config.clone(),
            n: report.n,
            m: report.m,
            theta_count: report.itemsets.theta_count,
            transactions_read: report.transactions_read(),
            levels: report.levels.clone(),
            itemsets: report
                .itemsets
                .iter()
                .map(|r| ItemsetEntry {
                    items: r.items.clone(),
                    support: r.support,
                })
                .collect(),
            accounting: None,
            comparison: None,
            timings: with_timings.then(|| report.timings.clone()),
        }
    }

    /// Attaches per-level savings and identity checks against an exact run
    /// of the same input.
    pub fn with_accounting(mut self, exact: &MiningReport) -> Self {
        let variant = self.config.variant;
        self.accounting = Some(
            self.levels
                .iter()
                .filter(|s| s.level > 1)
                .filter_map(|s| {
                    let oracle = exact.levels.iter().find(|o| o.level == s.level)?;
                    Some(LevelAccounting {
                        level: s.level,
                        check: accounting_check(s, oracle, self.n, variant),
                    })
                })
                .collect(),
        );
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s).map_err(|e| Error::Serialize(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Serialize(format!(
                "unsupported schema_version {:?}",
                doc.schema_version
            )));
        }
        Ok(doc)
    }
}

/// One bench row: a (variant, level) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub variant: Variant,
    pub level: usize,
    pub m_l: usize,
    pub candidates: u64,
    pub frequent: u64,
    pub transactions_read: u64,
    pub hash_overhead: u64,
    pub hash_bits_read: u64,
    pub true_negatives: u64,
    pub false_positives: u64,
    pub fallback: Option<String>,
    /// Blank unless timings were requested.
    pub wall_ms: Option<f64>,
}

impl BenchRow {
    pub fn from_report(report: &MiningReport, with_timings: bool) -> Vec<Self> {
        report
            .levels
            .iter()
            .map(|s| {
                let wall_ms = with_timings
                    .then(|| report.timings.iter().find(|t| t.level == s.level))
                    .flatten()
                    .map(|t| t.build_ms + t.query_ms + t.verify_ms);
                BenchRow {
                    variant: report.config.variant,
                    level: s.level,
                    m_l: s.m_l,
                    candidates: s.candidates,
                    frequent: s.frequent,
                    transactions_read: s.transactions_read,
                    hash_overhead: s.overhead_hashes,
                    hash_bits_read: s.hash_bits_read,
                    true_negatives: s.true_negatives,
                    false_positives: s.false_positives,
                    fallback: s.fallback.clone(),
                    wall_ms,
                }
            })
            .collect()
    }
}

pub const BENCH_COLUMNS: usize = 12;

/// Writes rows with a header; the header is written even for no rows.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let csv_err = |e: csv::Error| Error::Serialize(e.to_string());
    out.write_record([
        "variant",
        "level",
        "m_l",
        "candidates",
        "frequent",
        "transactions_read",
        "hash_overhead",
        "hash_bits_read",
        "true_negatives",
        "false_positives",
        "fallback",
        "wall_ms",
    ])
    .map_err(csv_err)?;
    for row in rows {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Serialize(e.to_string()))
}
