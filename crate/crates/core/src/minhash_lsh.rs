//! Asymmetric MinHash over padded vectors.
//!
//! Members of a level are summarized by `lambda` minwise values of their
//! preprocess-padded vectors; a query is summarized the same way from its
//! query padding, and a partner is accepted when the fraction of agreeing
//! rows clears `(1 - eps_mh) theta / (2 alpha - theta)`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemsetRecord;
use crate::exact::{check_fraction, compatible_union};
use crate::rng;
use crate::transform::{pad_ones_range, LevelContext, PadRole, PaddedVector};
use crate::{Error, Result};

/// Sketches wider than this are refused.
pub const MAX_LAMBDA: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinhashParams {
    /// Jaccard similarity at the far edge of the tolerance band.
    pub omega: f64,
    /// Relative estimation error allowed per pair.
    pub eps_mh: f64,
    pub lambda: usize,
    pub accept_threshold: f64,
}

/// `theta` may reach 1: a level's effective threshold `ceil(theta n) / n`
/// does when it rounds up to `n`, and the family still works there.
pub fn derive_params(alpha: f64, theta: f64, epsilon: f64, delta: f64) -> Result<MinhashParams> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::OutOfRange {
            name: "theta",
            range: "(0,1]",
            value: theta,
        });
    }
    check_fraction("delta", delta)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            range: "(0,1)",
            value: epsilon,
        });
    }
    if !(alpha >= theta && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            range: "[theta,1]",
            value: alpha,
        });
    }
    let far = (1.0 - epsilon) * theta;
    let omega = far / (2.0 * alpha - far);
    let eps_mh = alpha * epsilon / (alpha + (alpha - theta) * (1.0 - epsilon));
    let raw = 2.0 / (omega * eps_mh * eps_mh) * (1.0 / delta).ln();
    if !raw.is_finite() || raw > MAX_LAMBDA {
        return Err(Error::ToleranceTooSmall { lambda: raw });
    }
    Ok(MinhashParams {
        omega,
        eps_mh,
        lambda: (raw.ceil() as usize).max(1),
        accept_threshold: (1.0 - eps_mh) * theta / (2.0 * alpha - theta),
    })
}

pub fn derive_for_level(ctx: &LevelContext, epsilon: f64, delta: f64) -> Result<MinhashParams> {
    derive_params(ctx.alpha(), ctx.theta(), epsilon, delta)
}

/// `lambda` random permutations of the padded positions plus the minwise
/// column of every indexed itemset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinhashSketch {
    n: usize,
    alpha_count: usize,
    /// `ranks[r][i]` is the image of position `i` under permutation `r`.
    ranks: Vec<Vec<u32>>,
    columns: Vec<Vec<u32>>,
}

/// Value stored for a row when the set is empty.
pub const EMPTY_ROW: u32 = u32::MAX;

impl MinhashSketch {
    /// Permutations are seeded Fisher-Yates shuffles over `(1 + 2 alpha) n`
    /// positions.
    pub fn build(level: &[ItemsetRecord], params: &MinhashParams, ctx: &LevelContext, seed: u64) -> Self {
        let len = ctx.padded_len();
        let ranks = (0..params.lambda)
            .map(|r| {
                let mut rng = rng::seeded(rng::derive_seed(seed, r as u64));
                let mut perm: Vec<u32> = (0..len as u32).collect();
                perm.shuffle(&mut rng);
                perm
            })
            .collect();
        Self::with_permutations(level, ranks, ctx)
    }

    pub fn with_permutations(level: &[ItemsetRecord], ranks: Vec<Vec<u32>>, ctx: &LevelContext) -> Self {
        let mut sketch = Self {
            n: ctx.n,
            alpha_count: ctx.alpha_count,
            ranks,
            columns: Vec::new(),
        };
        sketch.columns = level
            .par_iter()
            .map(|rec| sketch.column_for(rec, PadRole::Preprocess))
            .collect();
        sketch
    }

    pub fn rows(&self) -> usize {
        self.ranks.len()
    }

    pub fn column(&self, index: usize) -> &[u32] {
        &self.columns[index]
    }

    /// Minwise column of the padded image of `rec` under `role`.
    pub fn column_for(&self, rec: &ItemsetRecord, role: PadRole) -> Vec<u32> {
        let (lo, hi) = pad_ones_range(role, rec.support, self.alpha_count);
        let ones: Vec<usize> = rec
            .vector
            .iter_ones()
            .chain(self.n + lo..self.n + hi)
            .collect();
        self.minwise(&ones)
    }

    /// Minwise column of an already padded vector.
    pub fn column_for_padded(&self, p: &PaddedVector) -> Vec<u32> {
        let ones: Vec<usize> = p.bits.iter_ones().collect();
        self.minwise(&ones)
    }

    /// For each permutation, the position in `ones` with the smallest image.
    fn minwise(&self, ones: &[usize]) -> Vec<u32> {
        self.ranks
            .iter()
            .map(|perm| {
                ones.iter()
                    .copied()
                    .min_by_key(|&i| perm[i])
                    .map_or(EMPTY_ROW, |i| i as u32)
            })
            .collect()
    }

    /// Compatible members whose estimated similarity with `Q(q)` reaches the
    /// acceptance threshold. Reads no column bits.
    pub fn query(&self, level: &[ItemsetRecord], q: &ItemsetRecord, params: &MinhashParams) -> MinhashQuery {
        let q_col = self.column_for(q, PadRole::Query);
        let mut out = MinhashQuery::default();
        for (a, rec) in level.iter().enumerate() {
            if compatible_union(&rec.items, &q.items).is_none() {
                continue;
            }
            out.compared += 1;
            if estimate_js(&self.columns[a], &q_col) >= params.accept_threshold {
                out.accepted.push(a);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MinhashQuery {
    pub accepted: Vec<usize>,
    /// Compatible sketch columns compared against the query.
    pub compared: usize,
}

/// Fraction of rows on which two minwise columns agree.
pub fn estimate_js(a: &[u32], b: &[u32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len() as f64
}
