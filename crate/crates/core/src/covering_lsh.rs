//! CoveringLSH: Hamming projections with no false negatives.
//!
//! A random map `phi` sends each padded position to a vector in
//! `GF(2)^d` with `d = t * theta' + 1`. Every nonzero `v` gives a mask
//! `a(v)_i = <phi(i), v>` and the hash `x -> x AND a(v)`. A similar pair
//! differs in at most `theta'` positions; their images under `phi` span fewer
//! than `d` dimensions, so some nonzero `v` is orthogonal to all of them and
//! the corresponding mask zeroes out every mismatch. Collision is certain.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitvec::BitVector;
use crate::dataset::ItemsetRecord;
use crate::exact::check_fraction;
use crate::exact::compatible_union;
use crate::hamming_lsh::{gather_colliders, verify_colliders, QueryOutcome};
use crate::rng;
use crate::transform::{pad_preprocess, pad_query, LevelContext};
use crate::{Error, Result};

pub const DEFAULT_MASK_DIM_CAP: u32 = 24;

/// Hard ceiling on the mask dimension regardless of the configured cap.
const MAX_MASK_DIM: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringParams {
    /// Padded dimension `(1 + 2 alpha) n`.
    pub n_prime: usize,
    /// Covering radius `2 (alpha - theta) n`.
    pub theta_prime: usize,
    pub t: usize,
    pub c: f64,
    pub eps_round: f64,
    pub nu: f64,
    pub mask_dim: u32,
    /// Bound on expected far collisions, `2^(theta' eps_round + 1) m_l^(1/c)`.
    pub psi_bound: f64,
    pub early_exit_budget: usize,
}

impl CoveringParams {
    pub fn family_size(&self) -> u64 {
        (1u64 << self.mask_dim) - 1
    }
}

pub fn derive_params(ctx: &LevelContext, epsilon: f64, delta: f64, mask_dim_cap: u32) -> Result<CoveringParams> {
    check_fraction("epsilon", epsilon)?;
    check_fraction("delta", delta)?;
    if ctx.is_degenerate() {
        return Err(Error::DegenerateLevel {
            alpha_count: ctx.alpha_count,
            theta_count: ctx.theta_count,
        });
    }
    let alpha = ctx.alpha_count as f64;
    let theta = ctx.theta_count as f64;
    let far_gap = alpha - (1.0 - epsilon) * theta;
    let theta_prime = 2 * (ctx.alpha_count - ctx.theta_count);
    let raw = (ctx.m_l.max(1) as f64).ln() / (2.0 * far_gap);
    let t = (raw.ceil() as usize).max(1);
    let eps_round = t as f64 - raw;
    let c = far_gap / (alpha - theta);
    let nu = (t as f64 + eps_round) / (c * t as f64);
    let dim = t as u64 * theta_prime as u64 + 1;
    let cap = mask_dim_cap.min(MAX_MASK_DIM);
    if dim > cap as u64 {
        return Err(Error::CoveringFamilyTooLarge {
            mask_dim: dim.min(u32::MAX as u64) as u32,
            cap,
        });
    }
    let psi_bound = 2f64.powf(theta_prime as f64 * eps_round + 1.0) * (ctx.m_l.max(1) as f64).powf(1.0 / c);
    Ok(CoveringParams {
        n_prime: ctx.padded_len(),
        theta_prime,
        t,
        c,
        eps_round,
        nu,
        mask_dim: dim as u32,
        psi_bound,
        early_exit_budget: (psi_bound / delta).ceil() as usize,
    })
}

/// The map `phi` and the masks it induces.
///
/// `a(v)` is linear in `v`, so only the `d` basis masks `a(e_j)` are stored;
/// the rest are XORs of them. Tables are enumerated in Gray-code order
/// (`v_k = k ^ (k >> 1)`), which moves from one mask to the next with a
/// single XOR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringFamily {
    mask_dim: u32,
    phi: Vec<u32>,
    basis: Vec<BitVector>,
}

/// The mask enumerated as table `k`.
#[inline]
fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

impl CoveringFamily {
    pub fn build(params: &CoveringParams, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let bound = 1u32 << params.mask_dim;
        let phi = (0..params.n_prime).map(|_| rng.gen_range(0..bound)).collect();
        Self::from_phi(phi, params.mask_dim)
    }

    /// Entries of `phi` must fit in `mask_dim` bits.
    pub fn from_phi(phi: Vec<u32>, mask_dim: u32) -> Self {
        assert!((1..=MAX_MASK_DIM).contains(&mask_dim));
        assert!(phi.iter().all(|&p| p >> mask_dim == 0), "phi entry wider than mask_dim");
        let basis = (0..mask_dim)
            .map(|j| BitVector::from_bools(phi.iter().map(|p| p >> j & 1 == 1)))
            .collect();
        Self { mask_dim, phi, basis }
    }

    pub fn mask_dim(&self) -> u32 {
        self.mask_dim
    }

    pub fn phi(&self) -> &[u32] {
        &self.phi
    }

    /// `2^d - 1`.
    pub fn len(&self) -> usize {
        (1usize << self.mask_dim) - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `a(v)` for nonzero `v`.
    pub fn mask(&self, v: u32) -> BitVector {
        assert!(v != 0 && v >> self.mask_dim == 0, "mask index out of range");
        let mut out = BitVector::zeros(self.n_prime());
        for (j, b) in self.basis.iter().enumerate() {
            if v >> j & 1 == 1 {
                out.xor_assign(b);
            }
        }
        out
    }

    /// Every mask, in table order.
    pub fn masks(&self) -> impl Iterator<Item = BitVector> + '_ {
        (1..=self.len() as u32).map(move |k| self.mask(gray(k)))
    }

    pub fn n_prime(&self) -> usize {
        self.phi.len()
    }

    /// `x AND a(e_j)` for each basis vector; keys of `x` under any mask are
    /// XORs of these.
    fn partial_keys(&self, x: &BitVector) -> Vec<BitVector> {
        self.basis.iter().map(|b| x.and(b)).collect()
    }
}

/// Whether some nonzero `v` has `<phi(i), v> = 0` for every `i` in
/// `positions`, i.e. some mask zeroes all of them. Brute force over `v`.
pub fn verify_covering(family: &CoveringFamily, positions: &[usize]) -> Result<bool> {
    let len = family.n_prime();
    if let Some(&bad) = positions.iter().find(|&&p| p >= len) {
        return Err(Error::PositionOutOfRange { position: bad, len });
    }
    Ok((1u32..1 << family.mask_dim)
        .any(|v| positions.iter().all(|&i| (family.phi[i] & v).count_ones().is_multiple_of(2))))
}

/// One table per mask, keyed by `P(a) AND mask`. Holds every table in
/// memory; for whole-level runs [`query_level`] streams them instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringIndex {
    tables: Vec<HashMap<Vec<u64>, Vec<usize>>>,
}

impl CoveringIndex {
    pub fn build(level: &[ItemsetRecord], family: &CoveringFamily, ctx: &LevelContext) -> Result<Self> {
        let padded = level
            .iter()
            .map(|r| pad_preprocess(&r.vector, ctx).map(|p| p.bits))
            .collect::<Result<Vec<_>>>()?;
        let tables = (1..=family.len() as u32)
            .into_par_iter()
            .map(|k| {
                let mask = family.mask(gray(k));
                let mut table: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
                for (i, p) in padded.iter().enumerate() {
                    table.entry(p.and(&mask).words().to_vec()).or_default().push(i);
                }
                table
            })
            .collect();
        Ok(Self { tables })
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn bucket_count(&self, table: usize) -> usize {
        self.tables[table].len()
    }

    /// Collides `Q(q)` under every mask, then verifies compatible colliders.
    pub fn query(
        &self,
        family: &CoveringFamily,
        level: &[ItemsetRecord],
        q: &ItemsetRecord,
        ctx: &LevelContext,
        early_exit_budget: Option<usize>,
    ) -> Result<QueryOutcome> {
        let qp = pad_query(&q.vector, ctx)?.bits;
        let keys: Vec<Vec<u64>> = family.masks().map(|m| qp.and(&m).words().to_vec()).collect();
        let buckets = self
            .tables
            .iter()
            .zip(&keys)
            .map(|(table, key)| table.get(key).map(Vec::as_slice).unwrap_or(&[]));
        let colliders = gather_colliders(level, q, buckets);
        Ok(verify_colliders(level, q, ctx.theta_count, early_exit_budget, colliders))
    }
}

/// Tables processed per parallel work unit by [`query_level`].
const TABLES_PER_CHUNK: u32 = 1 << 10;

/// Runs every member of `level` as a query without keeping the tables:
/// each one is built, probed by all queries and dropped. Gives the same
/// outcomes as querying a [`CoveringIndex`] member by member.
pub fn query_level(
    family: &CoveringFamily,
    level: &[ItemsetRecord],
    ctx: &LevelContext,
    early_exit_budget: Option<usize>,
) -> Result<Vec<QueryOutcome>> {
    let parts = |pad: fn(&BitVector, &LevelContext) -> Result<crate::transform::PaddedVector>| {
        level
            .par_iter()
            .map(|r| pad(&r.vector, ctx).map(|p| family.partial_keys(&p.bits)))
            .collect::<Result<Vec<_>>>()
    };
    let p_parts = parts(pad_preprocess)?;
    let q_parts = parts(pad_query)?;
    let total = family.len() as u32;
    let chunks: Vec<Vec<Vec<(usize, usize)>>> = (0..total.div_ceil(TABLES_PER_CHUNK))
        .into_par_iter()
        .map(|c| {
            let first = c * TABLES_PER_CHUNK + 1;
            let last = (first + TABLES_PER_CHUNK - 1).min(total);
            scan_tables(&p_parts, &q_parts, first, last)
        })
        .collect();
    Ok((0..level.len())
        .into_par_iter()
        .map(|q| {
            let mut order = Vec::new();
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for chunk in &chunks {
                for &(a, hits) in &chunk[q] {
                    *counts.entry(a).or_insert_with(|| {
                        order.push(a);
                        0
                    }) += hits;
                }
            }
            let colliders = order
                .into_iter()
                .filter(|&a| compatible_union(&level[a].items, &level[q].items).is_some())
                .map(|a| (a, counts[&a]))
                .collect();
            verify_colliders(level, &level[q], ctx.theta_count, early_exit_budget, colliders)
        })
        .collect())
}

/// Tables `first..=last`: per query, colliders in first-seen order with the
/// number of tables they share with it.
fn scan_tables(
    p_parts: &[Vec<BitVector>],
    q_parts: &[Vec<BitVector>],
    first: u32,
    last: u32,
) -> Vec<Vec<(usize, usize)>> {
    let key_of = |parts: &Vec<BitVector>, v: u32| {
        let mut key = BitVector::zeros(parts[0].len());
        for (j, part) in parts.iter().enumerate() {
            if v >> j & 1 == 1 {
                key.xor_assign(part);
            }
        }
        key
    };
    let v0 = gray(first);
    let mut p_keys: Vec<BitVector> = p_parts.iter().map(|p| key_of(p, v0)).collect();
    let mut q_keys: Vec<BitVector> = q_parts.iter().map(|p| key_of(p, v0)).collect();
    let mut seen: Vec<HashMap<usize, usize>> = vec![HashMap::new(); q_keys.len()];
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); q_keys.len()];
    for k in first..=last {
        if k > first {
            let j = k.trailing_zeros() as usize;
            for (key, parts) in p_keys.iter_mut().zip(p_parts) {
                key.xor_assign(&parts[j]);
            }
            for (key, parts) in q_keys.iter_mut().zip(q_parts) {
                key.xor_assign(&parts[j]);
            }
        }
        let mut table: HashMap<&[u64], Vec<usize>> = HashMap::new();
        for (a, key) in p_keys.iter().enumerate() {
            table.entry(key.words()).or_default().push(a);
        }
        for (q, key) in q_keys.iter().enumerate() {
            if let Some(bucket) = table.get(key.words()) {
                for &a in bucket {
                    match seen[q].get(&a) {
                        Some(&slot) => out[q][slot].1 += 1,
                        None => {
                            seen[q].insert(a, out[q].len());
                            out[q].push((a, 1));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Column bits (positions `< n`) read by one evaluation of every mask.
/// Position `i` lies in exactly `2^(d-1)` masks when `phi(i) != 0`.
pub fn column_bits_per_hash(family: &CoveringFamily, n: usize) -> u64 {
    let live = family.phi.iter().take(n).filter(|&&p| p != 0).count() as u64;
    live << (family.mask_dim - 1)
}

/// Total mask weight over the family.
pub fn bits_per_hash(family: &CoveringFamily) -> u64 {
    let live = family.phi.iter().filter(|&&p| p != 0).count() as u64;
    live << (family.mask_dim - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::co_support;
    use crate::transform::padded_hamming;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_ctx() -> LevelContext {
        LevelContext {
            n: 20,
            m_l: 100,
            alpha_count: 12,
            theta_count: 10,
        }
    }

    #[test]
    fn reference_parameters() {
        let p = derive_params(&reference_ctx(), 0.5, 0.1, DEFAULT_MASK_DIM_CAP).unwrap();
        assert_eq!(p.theta_prime, 4);
        assert_eq!(p.n_prime, 44);
        assert_eq!(p.t, 1);
        assert!((p.eps_round - 0.671_059).abs() < 1e-5, "{}", p.eps_round);
        assert!((p.c - 3.5).abs() < 1e-12);
        assert!((p.nu - 0.477_45).abs() < 1e-5, "{}", p.nu);
        assert_eq!(p.mask_dim, 5);
        assert_eq!(p.family_size(), 31);
        assert!((p.psi_bound - 47.9).abs() < 0.05, "{}", p.psi_bound);
        assert_eq!(p.early_exit_budget, (p.psi_bound / 0.1).ceil() as usize);
    }

    #[test]
    fn single_itemset_level_has_t_one() {
        let ctx = LevelContext {
            m_l: 1,
            ..reference_ctx()
        };
        let p = derive_params(&ctx, 0.5, 0.1, DEFAULT_MASK_DIM_CAP).unwrap();
        assert_eq!(p.t, 1);
        assert_eq!(p.mask_dim, 5);
    }

    #[test]
    fn degenerate_and_oversized() {
        let ctx = LevelContext {
            alpha_count: 10,
            ..reference_ctx()
        };
        assert!(matches!(
            derive_params(&ctx, 0.5, 0.1, 24),
            Err(Error::DegenerateLevel { .. })
        ));
        let wide = LevelContext {
            alpha_count: 20,
            ..reference_ctx()
        };
        assert!(matches!(
            derive_params(&wide, 0.5, 0.1, 12),
            Err(Error::CoveringFamilyTooLarge { mask_dim: 21, cap: 12 })
        ));
    }

    #[test]
    fn family_size_below_psi_bound() {
        for alpha in 11..=14 {
            for m_l in [1, 2, 10, 100, 1000] {
                for eps in [0.2, 0.5, 0.8] {
                    let ctx = LevelContext {
                        n: 20,
                        m_l,
                        alpha_count: alpha,
                        theta_count: 10,
                    };
                    let p = derive_params(&ctx, eps, 0.1, 30).unwrap();
                    assert!(p.c > 1.0);
                    assert!((p.family_size() as f64) < p.psi_bound, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn single_dimension_family() {
        let fam = CoveringFamily::from_phi(vec![1, 0, 1, 1], 1);
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.mask(1).to_string(), "1011");
    }

    #[test]
    fn masks_are_linear_in_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=5u32 {
            let phi: Vec<u32> = (0..17).map(|_| rng.gen_range(0..1 << d)).collect();
            let fam = CoveringFamily::from_phi(phi, d);
            for v1 in 1..1u32 << d {
                for v2 in 1..1u32 << d {
                    if v1 != v2 {
                        assert_eq!(fam.mask(v1).xor(&fam.mask(v2)), fam.mask(v1 ^ v2));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_phi_collapses_every_table() {
        let level: Vec<_> = ["1100", "0011", "1010"]
            .iter()
            .enumerate()
            .map(|(i, b)| ItemsetRecord::new(vec![i as u32], BitVector::parse(b)))
            .collect();
        let ctx = LevelContext::for_level(&level, 4, 1);
        let fam = CoveringFamily::from_phi(vec![0; ctx.padded_len()], 3);
        assert!(fam.masks().all(|m| m.count_ones() == 0));
        let index = CoveringIndex::build(&level, &fam, &ctx).unwrap();
        for t in 0..index.table_count() {
            assert_eq!(index.bucket_count(t), 1);
        }
        let out = index.query(&fam, &level, &level[0], &ctx, None).unwrap();
        assert_eq!(out.collisions.len(), 2);
        assert_eq!(out.partners.len(), 1);
    }

    #[test]
    fn all_ones_mask_partitions_by_padded_vector() {
        let level: Vec<_> = ["1100", "1100", "0110"]
            .iter()
            .enumerate()
            .map(|(i, b)| ItemsetRecord::new(vec![i as u32], BitVector::parse(b)))
            .collect();
        let ctx = LevelContext::for_level(&level, 4, 1);
        let fam = CoveringFamily::from_phi(vec![1; ctx.padded_len()], 1);
        assert_eq!(fam.mask(1).count_ones(), ctx.padded_len());
        let index = CoveringIndex::build(&level, &fam, &ctx).unwrap();
        assert_eq!(index.bucket_count(0), 2);
    }

    #[test]
    fn verify_covering_small_cases() {
        let fam = CoveringFamily::from_phi(vec![0b101, 0b011, 0b110, 0b111], 3);
        assert!(verify_covering(&fam, &[]).unwrap());
        for i in 0..4 {
            assert!(verify_covering(&fam, &[i]).unwrap());
        }
        // phi(0) ^ phi(1) = phi(2): span of {0,1,2} is 2-dimensional.
        assert!(verify_covering(&fam, &[0, 1, 2]).unwrap());
        // Three independent vectors span GF(2)^3: no orthogonal v.
        assert!(!verify_covering(&fam, &[0, 1, 3]).unwrap());
        assert!(matches!(verify_covering(&fam, &[9]), Err(Error::PositionOutOfRange { .. })));
    }

    #[test]
    fn similar_pairs_always_collide_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..100 {
            let n = rng.gen_range(4..12);
            let m = rng.gen_range(2..8);
            let level: Vec<_> = (0..m)
                .map(|i| ItemsetRecord::new(vec![i], BitVector::from_bools((0..n).map(|_| rng.gen_bool(0.6)))))
                .collect();
            let max = level.iter().map(|r| r.support).max().unwrap();
            if max < 2 {
                continue;
            }
            let theta_count = rng.gen_range(1..max);
            let ctx = LevelContext::for_level(&level, n, theta_count);
            let params = match derive_params(&ctx, 0.5, 0.1, 14) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let fam = CoveringFamily::build(&params, trial);
            let index = CoveringIndex::build(&level, &fam, &ctx).unwrap();
            for q in &level {
                let out = index.query(&fam, &level, q, &ctx, None).unwrap();
                for a in &level {
                    if a.items == q.items {
                        continue;
                    }
                    let s = co_support(&a.vector, &q.vector).unwrap();
                    if s >= theta_count {
                        let ham = padded_hamming(&pad_preprocess(&a.vector, &ctx).unwrap(), &pad_query(&q.vector, &ctx).unwrap()).unwrap();
                        assert!(ham <= params.theta_prime);
                        let ai = level.iter().position(|r| r.items == a.items).unwrap();
                        assert!(out.partners.iter().any(|&(i, _)| i == ai), "trial {trial}");
                    }
                }
            }
        }
    }

    #[test]
    fn streamed_level_query_matches_stored_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..30 {
            let n = rng.gen_range(4..14);
            let level: Vec<_> = (0..rng.gen_range(2..12u32))
                .map(|i| ItemsetRecord::new(vec![i], BitVector::from_bools((0..n).map(|_| rng.gen_bool(0.5)))))
                .collect();
            let max = level.iter().map(|r| r.support).max().unwrap();
            if max < 2 {
                continue;
            }
            let ctx = LevelContext::for_level(&level, n, rng.gen_range(1..max));
            let Ok(params) = derive_params(&ctx, 0.5, 0.1, 13) else { continue };
            let fam = CoveringFamily::build(&params, trial);
            let index = CoveringIndex::build(&level, &fam, &ctx).unwrap();
            let budget = (trial % 2 == 0).then_some(2);
            let streamed = query_level(&fam, &level, &ctx, budget).unwrap();
            for (q, out) in level.iter().zip(&streamed) {
                assert_eq!(*out, index.query(&fam, &level, q, &ctx, budget).unwrap());
            }
        }
    }

    #[test]
    fn closed_form_mask_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi: Vec<u32> = (0..19).map(|_| rng.gen_range(0..16)).collect();
        let fam = CoveringFamily::from_phi(phi, 4);
        let total: u64 = fam.masks().map(|m| m.count_ones() as u64).sum();
        assert_eq!(bits_per_hash(&fam), total);
        let head: u64 = fam.masks().map(|m| m.iter_ones().filter(|&i| i < 7).count() as u64).sum();
        assert_eq!(column_bits_per_hash(&fam, 7), head);
    }
}
