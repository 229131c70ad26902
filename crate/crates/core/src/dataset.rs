//! Transaction databases in vertical (column-per-item) form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitvec::BitVector;
use crate::rng;
use crate::{Error, Result};

pub type ItemId = u32;

/// Input file formats understood by [`load_transactions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One transaction per line, whitespace-separated item ids, no header.
    #[default]
    Fimi,
}

/// `n` transactions over an item universe of size `m`, stored as one
/// `n`-bit column per item. Only items that occur somewhere get a column;
/// every other id in `0..m` has an implicit all-zero column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDatabase {
    n: usize,
    m: usize,
    columns: BTreeMap<ItemId, BitVector>,
}

impl TransactionDatabase {
    /// Builds a database from row-major transactions.
    pub fn from_transactions<T: AsRef<[ItemId]>>(transactions: &[T]) -> Result<Self> {
        let n = transactions.len();
        if n == 0 {
            return Err(Error::EmptyDatabase);
        }
        let mut columns: BTreeMap<ItemId, BitVector> = BTreeMap::new();
        for (j, t) in transactions.iter().enumerate() {
            for &item in t.as_ref() {
                columns
                    .entry(item)
                    .or_insert_with(|| BitVector::zeros(n))
                    .set(j, true);
            }
        }
        let m = match columns.keys().next_back() {
            Some(&max) => max as usize + 1,
            None => return Err(Error::EmptyDatabase),
        };
        Ok(Self { n, m, columns })
    }

    /// Builds a database directly from columns. Every column must have `n` bits.
    pub fn from_columns(n: usize, columns: BTreeMap<ItemId, BitVector>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDatabase);
        }
        for col in columns.values() {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    left: col.len(),
                    right: n,
                });
            }
        }
        let m = match columns.keys().next_back() {
            Some(&max) => max as usize + 1,
            None => return Err(Error::EmptyDatabase),
        };
        Ok(Self { n, m, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The column of `item`, or `None` if the item never occurs.
    pub fn column(&self, item: ItemId) -> Option<&BitVector> {
        self.columns.get(&item)
    }

    /// Items that occur in at least one transaction, with their columns, in
    /// increasing id order.
    pub fn columns(&self) -> impl Iterator<Item = (ItemId, &BitVector)> {
        self.columns.iter().map(|(&id, col)| (id, col))
    }

    /// Transaction vector of an arbitrary itemset (AND of its columns).
    pub fn itemset_vector(&self, items: &[ItemId]) -> BitVector {
        let mut v = BitVector::ones(self.n);
        for item in items {
            match self.columns.get(item) {
                Some(col) => v.and_assign(col),
                None => return BitVector::zeros(self.n),
            }
        }
        v
    }

    pub fn record(&self, items: Vec<ItemId>) -> ItemsetRecord {
        let vector = self.itemset_vector(&items);
        ItemsetRecord::new(items, vector)
    }

    /// Row-major view, each transaction's items sorted ascending.
    pub fn transactions(&self) -> Vec<Vec<ItemId>> {
        let mut rows = vec![Vec::new(); self.n];
        for (&id, col) in &self.columns {
            for j in col.iter_ones() {
                rows[j].push(id);
            }
        }
        rows
    }

    pub fn write_fimi<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.transactions() {
            let mut first = true;
            for id in row {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{id}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

/// Parses FIMI text. Every line is one transaction; a blank line is an empty
/// transaction.
pub fn parse_fimi<R: BufRead>(reader: R) -> Result<TransactionDatabase> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: "<input>".into(),
            source,
        })?;
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            let id = token.parse::<ItemId>().map_err(|_| Error::InvalidToken {
                line: idx + 1,
                token: token.to_string(),
            })?;
            row.push(id);
        }
        rows.push(row);
    }
    TransactionDatabase::from_transactions(&rows)
}

pub fn load_transactions(path: &Path, format: Format) -> Result<TransactionDatabase> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Fimi => parse_fimi(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        }),
    }
}

/// Bernoulli(`density`) database: each item lands in each transaction
/// independently. Deterministic in `seed`.
pub fn generate_synthetic(n: usize, m: usize, density: f64, seed: u64) -> Result<TransactionDatabase> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::OutOfRange {
            name: "density",
            range: "(0,1]",
            value: density,
        });
    }
    if n == 0 || m == 0 {
        return Err(Error::EmptyDatabase);
    }
    let mut rng = rng::seeded(seed);
    let mut columns = BTreeMap::new();
    for item in 0..m {
        let mut col = BitVector::zeros(n);
        for j in 0..n {
            if rng.gen_bool(density) {
                col.set(j, true);
            }
        }
        columns.insert(item as ItemId, col);
    }
    // The universe is 0..m even if the highest item happens to be empty.
    Ok(TransactionDatabase { n, m, columns })
}

/// Number of transactions containing both itemsets: `popcount(x AND y)`.
pub fn co_support(x: &BitVector, y: &BitVector) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.and_count(y))
}

/// An itemset in canonical (strictly increasing) form with its transaction
/// vector and support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemsetRecord {
    pub items: Vec<ItemId>,
    pub vector: BitVector,
    pub support: usize,
}

impl ItemsetRecord {
    pub fn new(mut items: Vec<ItemId>, vector: BitVector) -> Self {
        items.sort_unstable();
        items.dedup();
        let support = vector.count_ones();
        Self {
            items,
            vector,
            support,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
