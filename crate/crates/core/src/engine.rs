//! Level-wise driver shared by exact Apriori and the LSH variants.
//!
//! Level 1 is always counted exactly. For every later level the variant
//! decides which compatible pairs of the previous level get joined: exact
//! joins all of them, the LSH variants only those their index reports as
//! likely similar. Every emitted itemset has its support checked against
//! the database, so no variant can output an infrequent itemset; the
//! randomized ones can only miss.
//!
//! Accounting follows one convention across variants. A *transaction read*
//! is one bit of one database column touched. Verifying a pair costs `n`;
//! hashing costs whatever column bits the hash evaluation consults
//! (padding bits are synthesized from the support and cost nothing).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering_lsh::{self, CoveringFamily, CoveringParams, DEFAULT_MASK_DIM_CAP};
use crate::dataset::{ItemId, ItemsetRecord, TransactionDatabase};
use crate::exact::{self, brute_force_mine, check_fraction, compatible_union, support_threshold, FrequentItemsetSet};
use crate::hamming_lsh::{self, HammingIndex, HammingLshParams, QueryOutcome};
use crate::minhash_lsh::{self, MinhashParams, MinhashSketch};
use crate::rng;
use crate::transform::LevelContext;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x15A7_2017;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Hamming,
    Minhash,
    Covering,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Exact, Variant::Hamming, Variant::Minhash, Variant::Covering];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Hamming => "hamming",
            Variant::Minhash => "minhash",
            Variant::Covering => "covering",
        }
    }

    pub fn is_lsh(self) -> bool {
        self != Variant::Exact
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub theta: f64,
    /// Tolerance; required by the LSH variants.
    pub epsilon: Option<f64>,
    /// Per-query failure probability; required by the LSH variants.
    pub delta: Option<f64>,
    pub variant: Variant,
    pub seed: u64,
    /// Largest itemset size to mine.
    pub max_level: Option<usize>,
    /// Apply the inspection budget to covering queries. Off by default since
    /// it can reintroduce misses.
    pub covering_early_exit: bool,
    pub mask_dim_cap: u32,
}

impl MiningConfig {
    pub fn exact(theta: f64) -> Self {
        Self {
            theta,
            epsilon: None,
            delta: None,
            variant: Variant::Exact,
            seed: DEFAULT_SEED,
            max_level: None,
            covering_early_exit: false,
            mask_dim_cap: DEFAULT_MASK_DIM_CAP,
        }
    }

    pub fn lsh(variant: Variant, theta: f64, epsilon: f64, delta: f64) -> Self {
        Self {
            variant,
            epsilon: Some(epsilon),
            delta: Some(delta),
            ..Self::exact(theta)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("theta", self.theta)?;
        if self.variant.is_lsh() {
            let eps = self
                .epsilon
                .ok_or_else(|| Error::Config(format!("{} requires epsilon", self.variant)))?;
            let delta = self
                .delta
                .ok_or_else(|| Error::Config(format!("{} requires delta", self.variant)))?;
            check_fraction("epsilon", eps)?;
            check_fraction("delta", delta)?;
        } else {
            if let Some(eps) = self.epsilon {
                check_fraction("epsilon", eps)?;
            }
            if let Some(delta) = self.delta {
                check_fraction("delta", delta)?;
            }
        }
        if self.max_level == Some(0) {
            return Err(Error::Config("max_level must be at least 1".into()));
        }
        if self.mask_dim_cap == 0 {
            return Err(Error::Config("mask_dim_cap must be at least 1".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> (f64, f64) {
        (self.epsilon.unwrap_or(0.0), self.delta.unwrap_or(0.0))
    }
}

/// Hash-family parameters in effect for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LevelParams {
    Hamming(HammingLshParams),
    Minhash(MinhashParams),
    Covering(CoveringParams),
}

/// Work and outcome of producing one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    /// Size of the itemsets this step produced.
    pub level: usize,
    /// Members of the previous level that were joined (columns scanned, at level 1).
    pub m_l: usize,
    pub alpha_count: Option<usize>,
    /// Distinct itemsets whose support was checked.
    pub candidates: u64,
    pub frequent: u64,
    /// Unordered compatible pairs in the previous level.
    pub compatible_pairs: u64,
    /// Compatible pairs whose union is frequent.
    pub frequent_pairs: u64,
    /// Column bits touched, for hashing and for verification.
    pub transactions_read: u64,
    /// Bits consulted by hash evaluations and sketch comparisons, padding included.
    pub hash_bits_read: u64,
    /// Hash evaluations: each member once as preprocess, once as query.
    pub overhead_hashes: u64,
    /// Per-evaluation cost used for savings, in transaction units.
    pub phi: u64,
    /// Negative compatible partners the variant never sent to verification.
    pub true_negatives: u64,
    /// Negative compatible partners that reached verification.
    pub false_positives: u64,
    pub early_exits: u64,
    pub misses_vs_oracle: Option<u64>,
    pub fallback: Option<String>,
    pub params: Option<LevelParams>,
}

impl LevelStats {
    fn new(level: usize, m_l: usize) -> Self {
        Self {
            level,
            m_l,
            alpha_count: None,
            candidates: 0,
            frequent: 0,
            compatible_pairs: 0,
            frequent_pairs: 0,
            transactions_read: 0,
            hash_bits_read: 0,
            overhead_hashes: 0,
            phi: 0,
            true_negatives: 0,
            false_positives: 0,
            early_exits: 0,
            misses_vs_oracle: None,
            fallback: None,
            params: None,
        }
    }
}

/// Wall-clock per phase for one level, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub level: usize,
    pub build_ms: f64,
    pub query_ms: f64,
    pub verify_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningReport {
    pub config: MiningConfig,
    pub n: usize,
    pub m: usize,
    pub levels: Vec<LevelStats>,
    pub itemsets: FrequentItemsetSet,
    pub timings: Vec<PhaseTimings>,
}

impl MiningReport {
    pub fn transactions_read(&self) -> u64 {
        self.levels.iter().map(|l| l.transactions_read).sum()
    }
}

/// Mines `db` with the configured variant.
pub fn lsh_apriori_mine(db: &TransactionDatabase, config: &MiningConfig) -> Result<MiningReport> {
    config.validate()?;
    let n = db.n();
    let theta_count = support_threshold(config.theta, n);

    let started = Instant::now();
    let (mut current, first) = exact::frequent_singletons(db, theta_count);
    let mut stats = LevelStats::new(1, first.candidates);
    stats.candidates = first.candidates as u64;
    stats.frequent = first.frequent as u64;
    stats.transactions_read = first.transactions_read;
    let mut levels = vec![stats];
    let mut timings = vec![PhaseTimings {
        level: 1,
        verify_ms: started.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    }];

    let mut by_level = Vec::new();
    while !current.is_empty() {
        let size = current[0].len();
        if config.max_level.is_some_and(|max| size >= max) || current.len() < 2 {
            by_level.push(current);
            break;
        }
        let ctx = LevelContext::for_level(&current, n, theta_count);
        let seed = rng::derive_seed(config.seed, size as u64);
        let step = mine_level(&current, &ctx, config, seed)?;
        let mut stats = step.stats;
        stats.frequent = step.next.len() as u64;
        levels.push(stats);
        timings.push(step.timings);
        by_level.push(current);
        current = step.next;
    }

    let mut itemsets = FrequentItemsetSet {
        by_level,
        theta_count,
    };
    itemsets.normalize();
    Ok(MiningReport {
        config: config.clone(),
        n,
        m: db.m(),
        levels,
        itemsets,
        timings,
    })
}

struct LevelStep {
    next: Vec<ItemsetRecord>,
    stats: LevelStats,
    timings: PhaseTimings,
}

/// Which compatible partners each query sent to verification, and what was
/// learned from doing so.
struct Probe {
    /// Per query member, partners checked against the database.
    reached: Vec<Vec<usize>>,
    /// Verified frequent unions, canonical order.
    next: Vec<ItemsetRecord>,
    /// Distinct unions checked.
    candidates: u64,
    verify_reads: u64,
    early_exits: u64,
}

fn mine_level(level: &[ItemsetRecord], ctx: &LevelContext, config: &MiningConfig, seed: u64) -> Result<LevelStep> {
    let (epsilon, delta) = config.tolerance();
    let n = ctx.n as u64;
    let m_l = level.len() as u64;
    let mut stats = LevelStats::new(level[0].len() + 1, level.len());
    stats.alpha_count = Some(ctx.alpha_count);
    let mut timings = PhaseTimings {
        level: stats.level,
        ..Default::default()
    };

    let fallback = |reason: String, stats: &mut LevelStats, timings: &mut PhaseTimings| {
        let t = Instant::now();
        let probe = exact_probe(level, ctx.theta_count);
        stats.fallback = Some(reason);
        timings.verify_ms = t.elapsed().as_secs_f64() * 1e3;
        probe
    };

    let probe = match config.variant {
        Variant::Exact => {
            let t = Instant::now();
            let probe = exact_probe(level, ctx.theta_count);
            timings.verify_ms = t.elapsed().as_secs_f64() * 1e3;
            probe
        }
        Variant::Hamming => match hamming_lsh::derive_for_level(ctx, epsilon, delta) {
            Ok(params) => {
                let t = Instant::now();
                let index = HammingIndex::build(level, &params, ctx, seed);
                timings.build_ms = t.elapsed().as_secs_f64() * 1e3;
                let t = Instant::now();
                let outcomes: Vec<QueryOutcome> = level
                    .par_iter()
                    .map(|q| index.query(level, q, ctx.theta_count, Some(params.early_exit_budget)))
                    .collect();
                timings.query_ms = t.elapsed().as_secs_f64() * 1e3;
                stats.params = Some(LevelParams::Hamming(params));
                stats.overhead_hashes = 2 * m_l;
                stats.hash_bits_read = 2 * m_l * index.bits_per_hash();
                stats.transactions_read = 2 * m_l * index.column_bits_per_hash();
                stats.phi = index.bits_per_hash();
                probe_from_outcomes(level, outcomes)
            }
            Err(Error::DegenerateLevel { .. }) => fallback("degenerate level".into(), &mut stats, &mut timings),
            Err(e) => return Err(e),
        },
        Variant::Covering => match covering_lsh::derive_params(ctx, epsilon, delta, config.mask_dim_cap) {
            Ok(params) => {
                let t = Instant::now();
                let family = CoveringFamily::build(&params, seed);
                timings.build_ms = t.elapsed().as_secs_f64() * 1e3;
                let t = Instant::now();
                let budget = config.covering_early_exit.then_some(params.early_exit_budget);
                let outcomes = covering_lsh::query_level(&family, level, ctx, budget)?;
                timings.query_ms = t.elapsed().as_secs_f64() * 1e3;
                let per_hash = covering_lsh::bits_per_hash(&family);
                stats.params = Some(LevelParams::Covering(params));
                stats.overhead_hashes = 2 * m_l;
                stats.hash_bits_read = 2 * m_l * per_hash;
                stats.transactions_read = 2 * m_l * covering_lsh::column_bits_per_hash(&family, ctx.n);
                stats.phi = per_hash;
                probe_from_outcomes(level, outcomes)
            }
            Err(Error::DegenerateLevel { .. }) => fallback("degenerate level".into(), &mut stats, &mut timings),
            Err(e @ Error::CoveringFamilyTooLarge { .. }) => fallback(e.to_string(), &mut stats, &mut timings),
            Err(e) => return Err(e),
        },
        Variant::Minhash => {
            let params = minhash_lsh::derive_for_level(ctx, epsilon, delta)?;
            let t = Instant::now();
            let sketch = MinhashSketch::build(level, &params, ctx, seed);
            timings.build_ms = t.elapsed().as_secs_f64() * 1e3;
            let t = Instant::now();
            let queries: Vec<_> = level.par_iter().map(|q| sketch.query(level, q, &params)).collect();
            timings.query_ms = t.elapsed().as_secs_f64() * 1e3;
            let compared: u64 = queries.iter().map(|q| q.compared as u64).sum();
            let lambda = params.lambda as u64;
            stats.params = Some(LevelParams::Minhash(params));
            stats.overhead_hashes = 2 * m_l;
            stats.hash_bits_read = 2 * m_l * ctx.padded_len() as u64 + lambda * compared;
            // Each hash evaluation scans its column once.
            stats.transactions_read = 2 * m_l * n;
            stats.phi = lambda;
            let t = Instant::now();
            let probe = minhash_probe(level, ctx.theta_count, queries.into_iter().map(|q| q.accepted).collect());
            timings.verify_ms = t.elapsed().as_secs_f64() * 1e3;
            probe
        }
    };

    stats.candidates = probe.candidates;
    stats.transactions_read += probe.verify_reads;
    stats.early_exits = probe.early_exits;

    let pairs = pair_census(level, ctx.theta_count);
    stats.compatible_pairs = pairs.compatible;
    stats.frequent_pairs = pairs.frequent;
    if config.variant.is_lsh() {
        let (tn, fp) = classify_negatives(level, ctx.theta_count, &probe.reached);
        stats.true_negatives = tn;
        stats.false_positives = fp;
    }

    Ok(LevelStep {
        next: probe.next,
        stats,
        timings,
    })
}

/// Joins every compatible pair; each distinct union is counted once.
fn exact_probe(level: &[ItemsetRecord], theta_count: usize) -> Probe {
    let (next, candidates) = exact::count_candidates(level, theta_count);
    let n = level[0].vector.len() as u64;
    let reached = (0..level.len())
        .map(|q| {
            (0..level.len())
                .filter(|&a| a != q && compatible_union(&level[a].items, &level[q].items).is_some())
                .collect()
        })
        .collect();
    Probe {
        reached,
        next,
        candidates: candidates as u64,
        verify_reads: candidates as u64 * n,
        early_exits: 0,
    }
}

/// Materializes verified unions in canonical order.
fn records(level: &[ItemsetRecord], verified: BTreeMap<Vec<ItemId>, (usize, usize, usize)>) -> Vec<ItemsetRecord> {
    verified
        .into_iter()
        .map(|(items, (i, j, support))| ItemsetRecord {
            items,
            vector: level[i].vector.and(&level[j].vector),
            support,
        })
        .collect()
}

fn probe_from_outcomes(level: &[ItemsetRecord], outcomes: Vec<QueryOutcome>) -> Probe {
    let mut verified = BTreeMap::new();
    let mut checked: HashSet<Vec<ItemId>> = HashSet::new();
    let mut verify_reads = 0;
    let mut early_exits = 0;
    let mut reached = Vec::with_capacity(outcomes.len());
    for (q, out) in outcomes.into_iter().enumerate() {
        verify_reads += out.transactions_read;
        early_exits += out.early_exit as u64;
        for &a in &out.inspected {
            if let Some(u) = compatible_union(&level[a].items, &level[q].items) {
                checked.insert(u);
            }
        }
        for &(a, support) in &out.partners {
            let u = compatible_union(&level[a].items, &level[q].items).expect("partners are compatible");
            verified.entry(u).or_insert((q.min(a), q.max(a), support));
        }
        reached.push(out.inspected);
    }
    Probe {
        reached,
        next: records(level, verified),
        candidates: checked.len() as u64,
        verify_reads,
        early_exits,
    }
}

/// Unions of accepted pairs form the candidate set; each distinct candidate
/// is then counted once against the database.
fn minhash_probe(level: &[ItemsetRecord], theta_count: usize, accepted: Vec<Vec<usize>>) -> Probe {
    let n = level[0].vector.len() as u64;
    let mut candidates: BTreeMap<Vec<ItemId>, (usize, usize)> = BTreeMap::new();
    for (q, partners) in accepted.iter().enumerate() {
        for &a in partners {
            let u = compatible_union(&level[a].items, &level[q].items).expect("accepted partners are compatible");
            candidates.entry(u).or_insert((q.min(a), q.max(a)));
        }
    }
    let c = candidates.len() as u64;
    let verified = candidates
        .into_par_iter()
        .filter_map(|(items, (i, j))| {
            let support = level[i].vector.and_count(&level[j].vector);
            (support >= theta_count).then_some((items, (i, j, support)))
        })
        .collect();
    Probe {
        reached: accepted,
        next: records(level, verified),
        candidates: c,
        verify_reads: c * n,
        early_exits: 0,
    }
}

struct PairCensus {
    compatible: u64,
    frequent: u64,
}

/// Counts unordered compatible pairs and those whose union is frequent.
fn pair_census(level: &[ItemsetRecord], theta_count: usize) -> PairCensus {
    let (compatible, frequent) = (0..level.len())
        .into_par_iter()
        .map(|i| {
            let mut c = 0;
            let mut f = 0;
            for j in i + 1..level.len() {
                if compatible_union(&level[i].items, &level[j].items).is_some() {
                    c += 1;
                    if level[i].vector.and_count(&level[j].vector) >= theta_count {
                        f += 1;
                    }
                }
            }
            (c, f)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    PairCensus { compatible, frequent }
}

/// Splits each query's negative compatible partners into those it sent to
/// verification (false positives) and those it skipped (true negatives).
fn classify_negatives(level: &[ItemsetRecord], theta_count: usize, reached: &[Vec<usize>]) -> (u64, u64) {
    (0..level.len())
        .into_par_iter()
        .map(|q| {
            let seen: HashSet<usize> = reached[q].iter().copied().collect();
            let mut tn = 0;
            let mut fp = 0;
            for a in 0..level.len() {
                if a == q || compatible_union(&level[a].items, &level[q].items).is_none() {
                    continue;
                }
                if level[a].vector.and_count(&level[q].vector) < theta_count {
                    if seen.contains(&a) {
                        fp += 1;
                    } else {
                        tn += 1;
                    }
                }
            }
            (tn, fp)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Differences between a variant's output and the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleDiff {
    /// Frequent itemsets the variant did not output.
    pub missed: Vec<Vec<ItemId>>,
    /// Output itemsets whose recounted support is below the threshold.
    pub sub_threshold: Vec<Vec<ItemId>>,
    pub levels: Vec<LevelDiff>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDiff {
    pub level: usize,
    pub oracle: u64,
    pub found: u64,
    pub missed: u64,
    pub true_negatives: u64,
    pub false_positives: u64,
}

impl OracleDiff {
    pub fn is_clean(&self) -> bool {
        self.missed.is_empty() && self.sub_threshold.is_empty()
    }
}

/// Runs the configured variant and diffs its output against brute force.
/// Fills `misses_vs_oracle` on the returned report's levels.
pub fn compare_with_oracle(db: &TransactionDatabase, config: &MiningConfig) -> Result<(MiningReport, OracleDiff)> {
    config.validate()?;
    let oracle = brute_force_mine(db, config.theta)?;
    let mut report = lsh_apriori_mine(db, config)?;
    let diff = diff_against(db, &oracle, &mut report);
    Ok((report, diff))
}

fn diff_against(db: &TransactionDatabase, oracle: &FrequentItemsetSet, report: &mut MiningReport) -> OracleDiff {
    let theta_count = oracle.theta_count;
    let missed: Vec<Vec<ItemId>> = oracle
        .iter()
        .filter(|r| !report.itemsets.contains(&r.items))
        .map(|r| r.items.clone())
        .collect();
    let sub_threshold = report
        .itemsets
        .iter()
        .filter(|r| db.itemset_vector(&r.items).count_ones() < theta_count)
        .map(|r| r.items.clone())
        .collect();
    let depth = oracle.by_level.len().max(report.itemsets.by_level.len());
    let mut levels = Vec::new();
    for l in 1..=depth {
        let in_oracle = oracle.by_level.get(l - 1).map_or(0, Vec::len) as u64;
        let found = report.itemsets.by_level.get(l - 1).map_or(0, Vec::len) as u64;
        let miss = missed.iter().filter(|m| m.len() == l).count() as u64;
        let stats = report.levels.iter_mut().find(|s| s.level == l);
        let (tn, fp) = stats.as_ref().map_or((0, 0), |s| (s.true_negatives, s.false_positives));
        if let Some(s) = stats {
            s.misses_vs_oracle = Some(miss);
        }
        levels.push(LevelDiff {
            level: l,
            oracle: in_oracle,
            found,
            missed: miss,
            true_negatives: tn,
            false_positives: fp,
        });
    }
    OracleDiff {
        missed,
        sub_threshold,
        levels,
    }
}

/// Empirical miss rate per itemset size over repeated seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMissRate {
    pub level: usize,
    pub itemsets: usize,
    pub trials: usize,
    /// Mean over the level's frequent itemsets of the fraction of runs missing it.
    pub mean_miss_rate: f64,
    pub max_miss_rate: f64,
    /// `min(1, delta * 2^level)`.
    pub bound: f64,
}

/// Runs the configured variant `trials` times with derived seeds and tallies,
/// per oracle itemset, how often it was missed.
pub fn miss_rates(db: &TransactionDatabase, config: &MiningConfig, trials: usize) -> Result<Vec<LevelMissRate>> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let oracle = brute_force_mine(db, config.theta)?;
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = MiningConfig {
                seed: rng::derive_seed(config.seed, t as u64),
                ..config.clone()
            };
            lsh_apriori_mine(db, &cfg).map(|r| r.itemsets)
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = config.delta.unwrap_or(0.0);
    Ok(oracle
        .by_level
        .iter()
        .enumerate()
        .map(|(i, level)| {
            let rates: Vec<f64> = level
                .iter()
                .map(|r| runs.iter().filter(|out| !out.contains(&r.items)).count() as f64 / trials as f64)
                .collect();
            let l = i + 1;
            LevelMissRate {
                level: l,
                itemsets: level.len(),
                trials,
                mean_miss_rate: if rates.is_empty() {
                    0.0
                } else {
                    rates.iter().sum::<f64>() / rates.len() as f64
                },
                max_miss_rate: rates.iter().copied().fold(0.0, f64::max),
                bound: (delta * 2f64.powi(l as i32)).min(1.0),
            }
        })
        .collect())
}

/// Savings and overhead of one level, set against the exact run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountingCheck {
    /// `(n - phi) * TN`.
    pub savings: i64,
    /// `2 m_l phi`.
    pub overhead: u64,
    /// Exact transactions read minus this variant's, for the same level.
    pub reads_saved: i64,
    /// `TN + FP == 2 (compatible pairs - frequent pairs)`, or `TN = FP = 0`
    /// for the exact variant.
    pub identity_holds: bool,
}

pub fn accounting_check(stats: &LevelStats, oracle: &LevelStats, n: usize, variant: Variant) -> AccountingCheck {
    let identity_holds = if variant.is_lsh() {
        stats.true_negatives + stats.false_positives == 2 * (stats.compatible_pairs - stats.frequent_pairs)
    } else {
        stats.true_negatives == 0 && stats.false_positives == 0
    };
    AccountingCheck {
        savings: (n as i64 - stats.phi as i64).saturating_mul(stats.true_negatives as i64),
        overhead: (2 * stats.m_l as u64).saturating_mul(stats.phi),
        reads_saved: oracle.transactions_read as i64 - stats.transactions_read as i64,
        identity_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, parse_fimi};
    use crate::exact::apriori_mine;

    fn toy() -> TransactionDatabase {
        parse_fimi("1 2 3\n1 2\n1 3\n2 3\n".as_bytes()).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("nope".parse::<Variant>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MiningConfig::exact(0.5).validate().is_ok());
        assert!(MiningConfig::exact(1.5).validate().is_err());
        let mut c = MiningConfig::lsh(Variant::Hamming, 0.5, 0.2, 0.1);
        assert!(c.validate().is_ok());
        c.delta = None;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(MiningConfig::lsh(Variant::Minhash, 0.5, 0.0, 0.1).validate().is_err());
    }

    #[test]
    fn exact_variant_matches_apriori() {
        let db = generate_synthetic(40, 8, 0.5, 9).unwrap();
        let report = lsh_apriori_mine(&db, &MiningConfig::exact(0.3)).unwrap();
        assert_eq!(report.itemsets, apriori_mine(&db, 0.3).unwrap().itemsets);
        assert!(report.levels.iter().all(|l| l.true_negatives == 0 && l.false_positives == 0));
    }

    #[test]
    fn exact_reads_match_apriori_tallies() {
        let db = generate_synthetic(40, 8, 0.5, 9).unwrap();
        let report = lsh_apriori_mine(&db, &MiningConfig::exact(0.3)).unwrap();
        let run = apriori_mine(&db, 0.3).unwrap();
        for (s, a) in report.levels.iter().zip(&run.levels) {
            assert_eq!((s.level, s.candidates as usize, s.transactions_read), (a.level, a.candidates, a.transactions_read));
        }
    }

    #[test]
    fn covering_on_toy_db_equals_exact() {
        let cfg = MiningConfig::lsh(Variant::Covering, 0.5, 0.5, 0.1);
        let (report, diff) = compare_with_oracle(&toy(), &cfg).unwrap();
        assert!(diff.is_clean(), "{diff:?}");
        assert_eq!(report.itemsets.len(), 6);
    }

    #[test]
    fn exact_diff_is_empty() {
        let (_, diff) = compare_with_oracle(&toy(), &MiningConfig::exact(0.5)).unwrap();
        assert!(diff.is_clean());
        assert_eq!(diff.levels.iter().map(|l| l.oracle).sum::<u64>(), 6);
    }

    #[test]
    fn no_variant_emits_infrequent_itemsets() {
        for seed in 0..10 {
            let db = generate_synthetic(30, 7, 0.55, seed).unwrap();
            for variant in Variant::ALL {
                let mut cfg = MiningConfig::lsh(variant, 0.3, 0.3, 0.2).with_seed(seed);
                cfg.mask_dim_cap = 12;
                let (_, diff) = compare_with_oracle(&db, &cfg).unwrap();
                assert!(diff.sub_threshold.is_empty(), "{variant} seed {seed}");
            }
        }
    }

    #[test]
    fn accounting_identity_on_random_dbs() {
        for seed in 0..15 {
            let db = generate_synthetic(24, 8, 0.5, seed).unwrap();
            for variant in [Variant::Hamming, Variant::Minhash, Variant::Covering] {
                let mut cfg = MiningConfig::lsh(variant, 0.3, 0.4, 0.2).with_seed(seed);
                cfg.mask_dim_cap = 12;
                let report = lsh_apriori_mine(&db, &cfg).unwrap();
                for s in &report.levels[1..] {
                    let check = accounting_check(s, s, db.n(), variant);
                    assert!(check.identity_holds, "{variant} seed {seed} {s:?}");
                }
            }
        }
    }

    #[test]
    fn exact_accounting_is_zero() {
        let report = lsh_apriori_mine(&toy(), &MiningConfig::exact(0.5)).unwrap();
        for s in &report.levels {
            let check = accounting_check(s, s, 4, Variant::Exact);
            assert!(check.identity_holds);
            assert_eq!(check.savings, 0);
        }
    }

    #[test]
    fn covering_all_negative_level_has_maximal_true_negatives() {
        // 16 items, each on its own block of 12 transactions: every pair is disjoint.
        let n = 16 * 12;
        let rows: Vec<Vec<ItemId>> = (0..n).map(|j| vec![(j / 12) as ItemId]).collect();
        let db = TransactionDatabase::from_transactions(&rows).unwrap();
        // theta_count = 10 < 12 = alpha_count, so theta' = 4 and d = 5.
        let theta = 10.0 / n as f64;
        let cfg = MiningConfig::lsh(Variant::Covering, theta, 0.5, 0.1);
        let report = lsh_apriori_mine(&db, &cfg).unwrap();
        let s = &report.levels[1];
        assert!(s.fallback.is_none());
        assert_eq!(s.frequent_pairs, 0);
        assert_eq!(s.compatible_pairs, 120);
        assert_eq!(s.true_negatives, 240);
        assert_eq!(s.false_positives, 0);
        let exact = lsh_apriori_mine(&db, &MiningConfig::exact(theta)).unwrap();
        let check = accounting_check(s, &exact.levels[1], n, Variant::Covering);
        assert!(check.identity_holds);
    }

    #[test]
    fn degenerate_level_falls_back() {
        // Every item has support exactly 2 = theta_count.
        let db = parse_fimi("0 1\n0 1\n2 3\n2 3\n".as_bytes()).unwrap();
        for variant in [Variant::Hamming, Variant::Covering] {
            let report = lsh_apriori_mine(&db, &MiningConfig::lsh(variant, 0.5, 0.2, 0.1)).unwrap();
            assert_eq!(report.levels[1].fallback.as_deref(), Some("degenerate level"));
            assert_eq!(report.itemsets, apriori_mine(&db, 0.5).unwrap().itemsets);
        }
    }

    #[test]
    fn oversized_covering_family_falls_back() {
        let db = generate_synthetic(60, 6, 0.8, 1).unwrap();
        let mut cfg = MiningConfig::lsh(Variant::Covering, 0.3, 0.5, 0.1);
        cfg.mask_dim_cap = 4;
        let report = lsh_apriori_mine(&db, &cfg).unwrap();
        assert!(report.levels[1].fallback.as_deref().unwrap().contains("too large"));
        assert_eq!(report.itemsets, apriori_mine(&db, 0.3).unwrap().itemsets);
    }

    #[test]
    fn max_level_stops_early() {
        let mut cfg = MiningConfig::exact(0.5);
        cfg.max_level = Some(1);
        let report = lsh_apriori_mine(&toy(), &cfg).unwrap();
        assert_eq!(report.itemsets.by_level.len(), 1);
        assert_eq!(report.levels.len(), 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let db = generate_synthetic(50, 9, 0.5, 4).unwrap();
        for variant in Variant::ALL {
            let mut cfg = MiningConfig::lsh(variant, 0.25, 0.3, 0.1).with_seed(77);
            cfg.mask_dim_cap = 12;
            let a = lsh_apriori_mine(&db, &cfg).unwrap();
            let b = lsh_apriori_mine(&db, &cfg).unwrap();
            assert_eq!(a.levels, b.levels);
            assert_eq!(a.itemsets, b.itemsets);
        }
    }

    #[test]
    fn miss_rates_exact_is_zero() {
        let rates = miss_rates(&toy(), &MiningConfig::exact(0.5), 3).unwrap();
        assert!(rates.iter().all(|r| r.max_miss_rate == 0.0));
        assert_eq!(rates.len(), 2);
    }
}
