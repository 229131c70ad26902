//! Frequent itemset mining over vertical bitmaps.
//!
//! Exact Apriori and a brute-force enumerator serve as oracles for three
//! LSH-pruned variants of the level-wise join: bit-sampling Hamming LSH,
//! asymmetric MinHash and CoveringLSH. All three operate on transaction
//! vectors padded asymmetrically so that co-support becomes a distance
//! (or a Jaccard similarity) a symmetric hash family can threshold.

pub mod bitvec;
pub mod covering_lsh;
pub mod dataset;
pub mod engine;
mod error;
pub mod exact;
pub mod hamming_lsh;
pub mod minhash_lsh;
pub mod report;
mod rng;
pub mod transform;

pub use bitvec::BitVector;
pub use dataset::{co_support, ItemId, ItemsetRecord, TransactionDatabase};
pub use engine::{lsh_apriori_mine, MiningConfig, MiningReport, Variant};
pub use error::{Error, Result};
pub use exact::{apriori_mine, brute_force_mine, FrequentItemsetSet};
pub use transform::LevelContext;
