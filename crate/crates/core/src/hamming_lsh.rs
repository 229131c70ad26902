//! Bit-sampling LSH for Hamming distance over padded vectors.
//!
//! Each of `L` tables keys an itemset by `k` positions of its padded vector
//! sampled uniformly with replacement. After padding, a pair at co-support `s`
//! agrees on `n + 2s` of the `n + 2a` positions, so agreement probability per
//! sampled bit grows with co-support.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemsetRecord;
use crate::exact::{check_fraction, compatible_union};
use crate::rng;
use crate::transform::{padded_bit, LevelContext, PadRole};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HammingLshParams {
    pub rho: f64,
    /// Sampled bits per bucket key.
    pub k: usize,
    /// Number of tables, `L`.
    pub tables: usize,
    /// Candidate inspections allowed without finding a similar partner,
    /// `ceil(L / delta)`.
    pub early_exit_budget: usize,
}

/// Parameters for a level with maximum support fraction `alpha`, threshold
/// `theta`, tolerance `epsilon`, failure probability `delta` and `m_l`
/// itemsets.
pub fn derive_params(alpha: f64, theta: f64, epsilon: f64, delta: f64, m_l: usize) -> Result<HammingLshParams> {
    check_fraction("epsilon", epsilon)?;
    check_fraction("delta", delta)?;
    check_fraction("theta", theta)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            range: "(0,1]",
            value: alpha,
        });
    }
    if alpha < theta {
        return Err(Error::OutOfRange {
            name: "alpha",
            range: "[theta,1]",
            value: alpha,
        });
    }
    let far = (1.0 - epsilon) * theta;
    if alpha - theta <= 1e-12 {
        return Err(Error::DegenerateLevel {
            alpha_count: 0,
            theta_count: 0,
        });
    }
    let rho = (alpha - theta) / (alpha - far);
    let ln_m = (m_l.max(1) as f64).ln();
    let base = ((1.0 + 2.0 * alpha) / (1.0 + 2.0 * far)).ln();
    let k = ((ln_m / base).ceil() as usize).max(1);
    let tables = (((m_l.max(1) as f64).powf(rho) * (1.0 / delta).ln()).ceil() as usize).max(1);
    let early_exit_budget = (tables as f64 / delta).ceil() as usize;
    Ok(HammingLshParams {
        rho,
        k,
        tables,
        early_exit_budget,
    })
}

/// [`derive_params`] with fractions taken from the level's integer counts.
pub fn derive_for_level(ctx: &LevelContext, epsilon: f64, delta: f64) -> Result<HammingLshParams> {
    if ctx.is_degenerate() {
        return Err(Error::DegenerateLevel {
            alpha_count: ctx.alpha_count,
            theta_count: ctx.theta_count,
        });
    }
    derive_params(ctx.alpha(), ctx.theta(), epsilon, delta, ctx.m_l)
}

/// `L` bucket tables over the preprocess-padded members of one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HammingIndex {
    n: usize,
    alpha_count: usize,
    projections: Vec<Vec<usize>>,
    tables: Vec<HashMap<Vec<u64>, Vec<usize>>>,
}

/// A compatible itemset that shared at least one bucket with the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Collision {
    /// Position of the partner in the indexed level.
    pub index: usize,
    /// Tables in which the partner shared the query's bucket.
    pub tables: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryOutcome {
    /// Partners verified to reach the threshold, with their co-support.
    pub partners: Vec<(usize, usize)>,
    /// Every partner whose co-support was checked, in inspection order.
    pub inspected: Vec<usize>,
    /// All compatible colliders, in first-seen order.
    pub collisions: Vec<Collision>,
    pub early_exit: bool,
    /// Column bits read while verifying.
    pub transactions_read: u64,
}

impl HammingIndex {
    /// Draws `L` projections of `k` positions each, then hashes every member
    /// of `level` into each table.
    pub fn build(level: &[ItemsetRecord], params: &HammingLshParams, ctx: &LevelContext, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let len = ctx.padded_len();
        let projections = (0..params.tables)
            .map(|_| (0..params.k).map(|_| rng.gen_range(0..len)).collect())
            .collect();
        Self::with_projections(level, projections, ctx)
    }

    pub fn with_projections(level: &[ItemsetRecord], projections: Vec<Vec<usize>>, ctx: &LevelContext) -> Self {
        let mut index = Self {
            n: ctx.n,
            alpha_count: ctx.alpha_count,
            projections,
            tables: Vec::new(),
        };
        index.tables = (0..index.projections.len())
            .into_par_iter()
            .map(|t| {
                let mut table: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
                for (i, rec) in level.iter().enumerate() {
                    table.entry(index.key(t, rec, PadRole::Preprocess)).or_default().push(i);
                }
                table
            })
            .collect();
        index
    }

    pub fn projections(&self) -> &[Vec<usize>] {
        &self.projections
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    /// Members of `table` sharing `key`.
    pub fn bucket(&self, table: usize, key: &[u64]) -> &[usize] {
        self.tables[table].get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The sampled bits of the padded image of `rec` for `table`.
    pub fn key(&self, table: usize, rec: &ItemsetRecord, role: PadRole) -> Vec<u64> {
        let proj = &self.projections[table];
        let mut key = vec![0u64; proj.len().div_ceil(64)];
        for (b, &pos) in proj.iter().enumerate() {
            if padded_bit(&rec.vector, rec.support, role, self.alpha_count, pos) {
                key[b / 64] |= 1 << (b % 64);
            }
        }
        key
    }

    /// Positions sampled per hash evaluation, over all tables.
    pub fn bits_per_hash(&self) -> u64 {
        self.projections.iter().map(|p| p.len() as u64).sum()
    }

    /// Sampled positions that land on real column bits rather than padding.
    pub fn column_bits_per_hash(&self) -> u64 {
        self.projections
            .iter()
            .flatten()
            .filter(|&&p| p < self.n)
            .count() as u64
    }

    /// Collects compatible colliders of `Q(q)` across all tables, then
    /// verifies them in first-seen order. With `early_exit_budget`, stops once
    /// that many have been inspected without any reaching the threshold.
    pub fn query(
        &self,
        level: &[ItemsetRecord],
        q: &ItemsetRecord,
        theta_count: usize,
        early_exit_budget: Option<usize>,
    ) -> QueryOutcome {
        let buckets = (0..self.tables.len()).map(|t| self.bucket(t, &self.key(t, q, PadRole::Query)));
        let colliders = gather_colliders(level, q, buckets);
        verify_colliders(level, q, theta_count, early_exit_budget, colliders)
    }
}

/// Compatible members of the query's buckets in first-seen order, each with
/// the number of buckets it shared with the query.
pub(crate) fn gather_colliders<'a, I>(level: &[ItemsetRecord], q: &ItemsetRecord, buckets: I) -> Vec<(usize, usize)>
where
    I: Iterator<Item = &'a [usize]>,
{
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut incompatible: HashSet<usize> = HashSet::new();
    for bucket in buckets {
        for &a in bucket {
            if incompatible.contains(&a) {
                continue;
            }
            if let Some(&i) = slot.get(&a) {
                order[i].1 += 1;
                continue;
            }
            if compatible_union(&level[a].items, &q.items).is_none() {
                incompatible.insert(a);
                continue;
            }
            slot.insert(a, order.len());
            order.push((a, 1));
        }
    }
    order
}

/// Checks co-support of each collider against the database, one inspection
/// at a time. With `early_exit_budget`, stops once that many have been
/// inspected without any reaching the threshold.
pub(crate) fn verify_colliders(
    level: &[ItemsetRecord],
    q: &ItemsetRecord,
    theta_count: usize,
    early_exit_budget: Option<usize>,
    colliders: Vec<(usize, usize)>,
) -> QueryOutcome {
    let n = q.vector.len() as u64;
    let mut out = QueryOutcome {
        collisions: colliders
            .iter()
            .map(|&(index, tables)| Collision { index, tables })
            .collect(),
        ..Default::default()
    };
    for &(a, _) in &colliders {
        if let Some(budget) = early_exit_budget {
            if out.partners.is_empty() && out.inspected.len() >= budget {
                out.early_exit = true;
                break;
            }
        }
        out.inspected.push(a);
        out.transactions_read += n;
        let s = level[a].vector.and_count(&q.vector);
        if s >= theta_count {
            out.partners.push((a, s));
        }
    }
    out
}
