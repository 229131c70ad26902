//! Asymmetric padding of transaction vectors.
//!
//! With `a` the largest support in a level, the preprocessing pad `P` and
//! the query pad `Q` both bring a vector of weight `w` up to weight `a`:
//!
//! ```text
//! P(v) = v | 1^(a-w) 0^(a+w)
//! Q(v) = v | 0^a 1^(a-w) 0^w
//! ```
//!
//! The padded tails of `P(x)` and `Q(y)` never overlap, so the Hamming
//! distance is `2(a - |x,y|)` and the Jaccard similarity is
//! `|x,y| / (2a - |x,y|)`. Both are monotone in co-support.

use serde::{Deserialize, Serialize};

use crate::bitvec::BitVector;
use crate::dataset::ItemsetRecord;
use crate::{Error, Result};

/// Per-level quantities shared by all hash families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelContext {
    pub n: usize,
    pub m_l: usize,
    /// Largest support among the level's itemsets.
    pub alpha_count: usize,
    pub theta_count: usize,
}

impl LevelContext {
    pub fn for_level(level: &[ItemsetRecord], n: usize, theta_count: usize) -> Self {
        Self {
            n,
            m_l: level.len(),
            alpha_count: level.iter().map(|r| r.support).max().unwrap_or(0),
            theta_count,
        }
    }

    /// Maximum support as a fraction of `n`.
    pub fn alpha(&self) -> f64 {
        self.alpha_count as f64 / self.n as f64
    }

    /// Effective threshold fraction `ceil(theta n) / n`.
    pub fn theta(&self) -> f64 {
        self.theta_count as f64 / self.n as f64
    }

    pub fn padded_len(&self) -> usize {
        self.n + 2 * self.alpha_count
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha_count <= self.theta_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PadRole {
    Preprocess,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedVector {
    pub bits: BitVector,
    pub role: PadRole,
}

/// Where the run of padding ones sits in the tail for a vector of `weight`,
/// as offsets past the original `n` bits.
#[inline]
pub(crate) fn pad_ones_range(role: PadRole, weight: usize, alpha_count: usize) -> (usize, usize) {
    let fill = alpha_count - weight;
    match role {
        PadRole::Preprocess => (0, fill),
        PadRole::Query => (alpha_count, alpha_count + fill),
    }
}

/// Bit `pos` of the padded image of `v` without materializing it.
#[inline]
pub fn padded_bit(v: &BitVector, weight: usize, role: PadRole, alpha_count: usize, pos: usize) -> bool {
    let n = v.len();
    if pos < n {
        v.get(pos)
    } else {
        let (lo, hi) = pad_ones_range(role, weight, alpha_count);
        (lo..hi).contains(&(pos - n))
    }
}

fn pad(v: &BitVector, ctx: &LevelContext, role: PadRole) -> Result<PaddedVector> {
    let weight = v.count_ones();
    if weight > ctx.alpha_count {
        return Err(Error::WeightExceedsAlpha {
            weight,
            alpha_count: ctx.alpha_count,
        });
    }
    let n = v.len();
    let mut bits = BitVector::zeros(n + 2 * ctx.alpha_count);
    for i in v.iter_ones() {
        bits.set(i, true);
    }
    let (lo, hi) = pad_ones_range(role, weight, ctx.alpha_count);
    bits.set_range(n + lo, n + hi);
    Ok(PaddedVector { bits, role })
}

/// `v | 1^(a-|v|) 0^(a+|v|)`.
pub fn pad_preprocess(v: &BitVector, ctx: &LevelContext) -> Result<PaddedVector> {
    pad(v, ctx, PadRole::Preprocess)
}

/// `v | 0^a 1^(a-|v|) 0^|v|`.
pub fn pad_query(v: &BitVector, ctx: &LevelContext) -> Result<PaddedVector> {
    pad(v, ctx, PadRole::Query)
}

fn check_pair(p: &PaddedVector, q: &PaddedVector) -> Result<()> {
    if p.role != PadRole::Preprocess || q.role != PadRole::Query {
        return Err(Error::RoleMismatch);
    }
    if p.bits.len() != q.bits.len() {
        return Err(Error::LengthMismatch {
            left: p.bits.len(),
            right: q.bits.len(),
        });
    }
    Ok(())
}

pub fn padded_hamming(p: &PaddedVector, q: &PaddedVector) -> Result<usize> {
    check_pair(p, q)?;
    Ok(p.bits.xor_count(&q.bits))
}

/// An exact Jaccard similarity `intersection / union`.
#[derive(Debug, Clone, Copy)]
pub struct JaccardRatio {
    pub intersection: usize,
    pub union: usize,
}

impl JaccardRatio {
    pub fn value(&self) -> f64 {
        self.intersection as f64 / self.union as f64
    }
}

impl PartialEq for JaccardRatio {
    fn eq(&self, other: &Self) -> bool {
        (self.intersection as u128) * (other.union as u128) == (other.intersection as u128) * (self.union as u128)
    }
}

impl Eq for JaccardRatio {}

pub fn padded_jaccard(p: &PaddedVector, q: &PaddedVector) -> Result<JaccardRatio> {
    check_pair(p, q)?;
    let union = p.bits.or_count(&q.bits);
    if union == 0 {
        return Err(Error::EmptyUnion);
    }
    Ok(JaccardRatio {
        intersection: p.bits.and_count(&q.bits),
        union,
    })
}
