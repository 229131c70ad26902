//! Exact level-wise Apriori and a brute-force enumerator.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::bitvec::BitVector;
use crate::dataset::{ItemId, ItemsetRecord, TransactionDatabase};
use crate::{Error, Result};

/// Largest universe [`brute_force_mine`] will enumerate.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

/// Integer support threshold `ceil(theta * n)`.
///
/// A product that lands within rounding noise of an integer is taken as that
/// integer, so `0.3 * 10` gives 3 rather than 4.
pub fn support_threshold(theta: f64, n: usize) -> usize {
    let x = theta * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

pub(crate) fn check_fraction(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            range: "(0,1)",
            value,
        })
    }
}

/// Frequent itemsets grouped by size. `by_level[0]` holds the singletons.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequentItemsetSet {
    pub by_level: Vec<Vec<ItemsetRecord>>,
    pub theta_count: usize,
}

impl FrequentItemsetSet {
    pub fn len(&self) -> usize {
        self.by_level.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &ItemsetRecord> {
        self.by_level.iter().flatten()
    }

    /// Item lists with their supports.
    pub fn itemsets(&self) -> BTreeMap<Vec<ItemId>, usize> {
        self.iter().map(|r| (r.items.clone(), r.support)).collect()
    }

    pub fn contains(&self, items: &[ItemId]) -> bool {
        self.by_level
            .get(items.len().wrapping_sub(1))
            .is_some_and(|level| level.binary_search_by(|r| r.items.as_slice().cmp(items)).is_ok())
    }

    /// Drops trailing empty levels and sorts each level canonically.
    pub(crate) fn normalize(&mut self) {
        for level in &mut self.by_level {
            level.sort_by(|a, b| a.items.cmp(&b.items));
        }
        while self.by_level.last().is_some_and(Vec::is_empty) {
            self.by_level.pop();
        }
    }

    /// Every (l-1)-subset of each level-l itemset is present at level l-1.
    pub fn is_downward_closed(&self) -> bool {
        self.by_level.iter().skip(1).all(|level| {
            level.iter().all(|r| {
                (0..r.items.len()).all(|skip| {
                    let sub: Vec<ItemId> = r
                        .items
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    self.contains(&sub)
                })
            })
        })
    }
}

/// Per-level work done by [`apriori_mine`]. `level` is the size of the
/// candidates counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AprioriLevel {
    pub level: usize,
    pub candidates: usize,
    pub frequent: usize,
    pub transactions_read: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AprioriRun {
    pub itemsets: FrequentItemsetSet,
    pub levels: Vec<AprioriLevel>,
}

/// Union of two equal-size sorted itemsets when it has exactly one more item
/// than either (the Apriori join condition).
pub fn compatible_union(a: &[ItemId], b: &[ItemId]) -> Option<Vec<ItemId>> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let l = a.len();
    let mut out = Vec::with_capacity(l + 1);
    let (mut i, mut j) = (0, 0);
    while i < l || j < l {
        if out.len() > l + 1 {
            return None;
        }
        match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                out.push(x);
                i += 1;
                j += 1;
            }
            (Some(&x), Some(&y)) if x < y => {
                out.push(x);
                i += 1;
            }
            (Some(_), Some(&y)) => {
                out.push(y);
                j += 1;
            }
            (Some(&x), None) => {
                out.push(x);
                i += 1;
            }
            (None, Some(&y)) => {
                out.push(y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    (out.len() == l + 1).then_some(out)
}

/// All distinct unions of compatible pairs in `level`, sorted.
pub fn join_compatible(level: &[ItemsetRecord]) -> Vec<Vec<ItemId>> {
    let mut out = BTreeSet::new();
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            if let Some(u) = compatible_union(&a.items, &b.items) {
                out.insert(u);
            }
        }
    }
    out.into_iter().collect()
}

/// Frequent singletons. Every present column costs one full scan.
pub(crate) fn frequent_singletons(db: &TransactionDatabase, theta_count: usize) -> (Vec<ItemsetRecord>, AprioriLevel) {
    let mut level = Vec::new();
    let mut candidates = 0;
    for (id, col) in db.columns() {
        candidates += 1;
        let support = col.count_ones();
        if support >= theta_count {
            level.push(ItemsetRecord {
                items: vec![id],
                vector: col.clone(),
                support,
            });
        }
    }
    let stats = AprioriLevel {
        level: 1,
        candidates,
        frequent: level.len(),
        transactions_read: (candidates * db.n()) as u64,
    };
    (level, stats)
}

/// Counts supports of joined candidates. Each candidate's vector is the AND
/// of two generating members of the previous level, one full scan each.
pub(crate) fn count_candidates(
    level: &[ItemsetRecord],
    theta_count: usize,
) -> (Vec<ItemsetRecord>, usize) {
    let mut generators: BTreeMap<Vec<ItemId>, (usize, usize)> = BTreeMap::new();
    for (i, a) in level.iter().enumerate() {
        for (j, b) in level.iter().enumerate().skip(i + 1) {
            if let Some(u) = compatible_union(&a.items, &b.items) {
                generators.entry(u).or_insert((i, j));
            }
        }
    }
    let candidates: Vec<_> = generators.into_iter().collect();
    let c = candidates.len();
    let next = candidates
        .into_par_iter()
        .filter_map(|(items, (i, j))| {
            let vector = level[i].vector.and(&level[j].vector);
            let support = vector.count_ones();
            (support >= theta_count).then_some(ItemsetRecord {
                items,
                vector,
                support,
            })
        })
        .collect();
    (next, c)
}

/// Exact Apriori: level-wise join of compatible pairs followed by a support
/// scan, until a level comes back empty.
pub fn apriori_mine(db: &TransactionDatabase, theta: f64) -> Result<AprioriRun> {
    check_fraction("theta", theta)?;
    let theta_count = support_threshold(theta, db.n());
    let (mut current, first) = frequent_singletons(db, theta_count);
    let mut levels = vec![first];
    let mut by_level = Vec::new();
    while !current.is_empty() {
        let (next, candidates) = count_candidates(&current, theta_count);
        if candidates > 0 {
            levels.push(AprioriLevel {
                level: current[0].len() + 1,
                candidates,
                frequent: next.len(),
                transactions_read: (candidates * db.n()) as u64,
            });
        }
        by_level.push(current);
        current = next;
    }
    let mut itemsets = FrequentItemsetSet {
        by_level,
        theta_count,
    };
    itemsets.normalize();
    Ok(AprioriRun { itemsets, levels })
}

/// Enumerates every non-empty subset of `0..m` and keeps the frequent ones.
pub fn brute_force_mine(db: &TransactionDatabase, theta: f64) -> Result<FrequentItemsetSet> {
    check_fraction("theta", theta)?;
    let m = db.m();
    if m > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::UniverseTooLarge {
            m,
            max: BRUTE_FORCE_MAX_ITEMS,
        });
    }
    let theta_count = support_threshold(theta, db.n());
    let zero = BitVector::zeros(db.n());
    let columns: Vec<&BitVector> = (0..m as ItemId)
        .map(|id| db.column(id).unwrap_or(&zero))
        .collect();
    let mut by_level: Vec<Vec<ItemsetRecord>> = vec![Vec::new(); m];
    for mask in 1u32..(1u32 << m) {
        let items: Vec<ItemId> = (0..m as ItemId).filter(|&i| mask >> i & 1 == 1).collect();
        let mut vector = BitVector::ones(db.n());
        for &i in &items {
            vector.and_assign(columns[i as usize]);
        }
        let support = vector.count_ones();
        if support >= theta_count {
            by_level[items.len() - 1].push(ItemsetRecord {
                items,
                vector,
                support,
            });
        }
    }
    let mut out = FrequentItemsetSet {
        by_level,
        theta_count,
    };
    out.normalize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, parse_fimi};

    fn toy() -> TransactionDatabase {
        parse_fimi("1 2 3\n1 2\n1 3\n2 3\n".as_bytes()).unwrap()
    }

    fn rec(items: &[ItemId]) -> ItemsetRecord {
        ItemsetRecord {
            items: items.to_vec(),
            vector: BitVector::zeros(1),
            support: 0,
        }
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(support_threshold(0.5, 4), 2);
        assert_eq!(support_threshold(0.3, 10), 3);
        assert_eq!(support_threshold(0.25, 10), 3);
        assert_eq!(support_threshold(0.1, 3), 1);
    }

    #[test]
    fn toy_apriori() {
        let run = apriori_mine(&toy(), 0.5).unwrap();
        let got: Vec<_> = run.itemsets.itemsets().into_keys().collect();
        let want: Vec<Vec<ItemId>> = vec![vec![1], vec![1, 2], vec![1, 3], vec![2], vec![2, 3], vec![3]];
        assert_eq!(got, want);
        assert!(!run.itemsets.contains(&[1, 2, 3]));
        assert_eq!(run.itemsets.theta_count, 2);
        // Level 2 counts three pairs, level 3 a single candidate.
        assert_eq!(run.levels[1].candidates, 3);
        assert_eq!(run.levels[2].candidates, 1);
        assert_eq!(run.levels[2].frequent, 0);
        assert_eq!(run.levels[2].transactions_read, 4);
    }

    #[test]
    fn unattainable_threshold() {
        let run = apriori_mine(&toy(), 0.99).unwrap();
        assert!(run.itemsets.is_empty());
    }

    #[test]
    fn saturated_item() {
        let db = parse_fimi("0 1\n0\n0 2\n0\n".as_bytes()).unwrap();
        let run = apriori_mine(&db, 0.5).unwrap();
        assert!(run.itemsets.contains(&[0]));
        assert!(!run.itemsets.contains(&[1]));
    }

    #[test]
    fn theta_out_of_range() {
        assert!(apriori_mine(&toy(), 0.0).is_err());
        assert!(apriori_mine(&toy(), 1.0).is_err());
        assert!(brute_force_mine(&toy(), 1.5).is_err());
    }

    #[test]
    fn join_examples() {
        assert_eq!(join_compatible(&[rec(&[1, 2]), rec(&[1, 3]), rec(&[2, 3])]), vec![vec![1, 2, 3]]);
        assert_eq!(join_compatible(&[rec(&[1]), rec(&[2])]), vec![vec![1, 2]]);
        assert!(join_compatible(&[rec(&[1, 2]), rec(&[3, 4])]).is_empty());
        assert!(join_compatible(&[]).is_empty());
    }

    #[test]
    fn compatible_union_edge_cases() {
        assert_eq!(compatible_union(&[1, 2], &[1, 2]), None);
        assert_eq!(compatible_union(&[1, 5], &[2, 5]), Some(vec![1, 2, 5]));
        assert_eq!(compatible_union(&[1], &[1, 2]), None);
    }

    #[test]
    fn brute_force_matches_toy() {
        let db = toy();
        let bf = brute_force_mine(&db, 0.5).unwrap();
        assert_eq!(bf, apriori_mine(&db, 0.5).unwrap().itemsets);
    }

    #[test]
    fn brute_force_minimum_threshold() {
        // theta_count = 1: every itemset contained in some transaction.
        let db = parse_fimi("0 1\n2\n".as_bytes()).unwrap();
        let got: Vec<_> = brute_force_mine(&db, 0.1).unwrap().itemsets().into_keys().collect();
        assert_eq!(got, vec![vec![0], vec![0, 1], vec![1], vec![2]]);
    }

    #[test]
    fn brute_force_single_transaction_powerset() {
        let db = parse_fimi("0 2 3\n".as_bytes()).unwrap();
        let out = brute_force_mine(&db, 0.999).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.contains(&[0, 2, 3]));
    }

    #[test]
    fn brute_force_guard() {
        let db = parse_fimi("25\n".as_bytes()).unwrap();
        assert!(matches!(brute_force_mine(&db, 0.5), Err(Error::UniverseTooLarge { .. })));
    }

    #[test]
    fn apriori_equals_brute_force_random() {
        for seed in 0..100u64 {
            let n = 8 + (seed as usize * 7) % 57;
            let m = 3 + (seed as usize) % 10;
            let db = generate_synthetic(n, m, 0.45, seed).unwrap();
            for theta in [0.2, 0.5, 0.8] {
                let a = apriori_mine(&db, theta).unwrap().itemsets;
                assert_eq!(a, brute_force_mine(&db, theta).unwrap(), "seed {seed} theta {theta}");
                assert!(a.is_downward_closed());
            }
        }
    }
}
