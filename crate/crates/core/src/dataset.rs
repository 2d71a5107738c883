//! Transaction datasets, file ingestion, and partitioning into segments.
//!
//! A dataset is an ordered sequence of transactions; order is preserved from
//! ingestion because it carries the time semantics used by trend analysis.
//! Partitioning slices a dataset into memory-bounded segments that the miner
//! processes one at a time.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Item identifier. Ids need not be contiguous; comparison is numeric.
pub type Item = u32;

/// A transaction in canonical form: item ids strictly increasing, no
/// duplicates. Constructible only through [`Transaction::new`], which
/// canonicalizes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Transaction {
    items: Vec<Item>,
}

impl Transaction {
    /// Canonicalizes the given items: deduplicate and sort ascending.
    pub fn new(mut items: Vec<Item>) -> Self {
        items.sort_unstable();
        items.dedup();
        Transaction { items }
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sorted-merge containment test; both sides are canonical.
    pub fn contains_all(&self, itemset: &[Item]) -> bool {
        let mut it = self.items.iter();
        'outer: for want in itemset {
            for have in it.by_ref() {
                if have == want {
                    continue 'outer;
                }
                if have > want {
                    return false;
                }
            }
            return false;
        }
        true
    }
}

/// An ordered collection of transactions with a source label.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransactionDataset {
    source_name: String,
    transactions: Vec<Transaction>,
}

impl TransactionDataset {
    pub fn new(source_name: impl Into<String>, transactions: Vec<Transaction>) -> Self {
        TransactionDataset {
            source_name: source_name.into(),
            transactions,
        }
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Writes the dataset back out in the one-transaction-per-line format.
    /// Loading the written file reproduces the same transaction sequence.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for t in &self.transactions {
            let mut first = true;
            for item in t.items() {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{item}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// One subset of a partitioned dataset, mined independently in memory.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Segment {
    pub segment_id: u64,
    /// Position in time order; 0..k-1 without gaps across a partition.
    pub ordinal: u64,
    transactions: Vec<Transaction>,
}

impl Segment {
    pub fn new(segment_id: u64, ordinal: u64, transactions: Vec<Transaction>) -> Self {
        Segment {
            segment_id,
            ordinal,
            transactions,
        }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }
}

/// How a partition was produced.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// Consecutive slices of at most `max_segment_size` transactions.
    Sequential { max_segment_size: u64 },
    /// `k` consecutive slices with sizes differing by at most one.
    CountBalanced { k: u64 },
}

/// A partition of a dataset into segments. Every transaction of the parent
/// appears in exactly one segment; concatenating segments in ordinal order
/// reproduces the parent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Partition {
    pub strategy: PartitionStrategy,
    segments: Vec<Segment>,
}

impl Partition {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_transactions(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }
}

/// Loads a dataset from a text file: one transaction per non-empty line,
/// whitespace-separated non-negative integer item ids. Items on a line are
/// deduplicated and sorted; line order is preserved. Accepts LF or CRLF.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<TransactionDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut transactions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut items = Vec::new();
        for token in line.split_whitespace() {
            let item: Item = token.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("invalid item id '{token}'"),
            })?;
            items.push(item);
        }
        if items.is_empty() {
            continue; // blank line
        }
        transactions.push(Transaction::new(items));
    }
    Ok(TransactionDataset::new(
        path.display().to_string(),
        transactions,
    ))
}

/// Splits into consecutive slices of exactly `max_segment_size` transactions,
/// except possibly the last.
pub fn partition_sequential(ds: &TransactionDataset, max_segment_size: usize) -> Result<Partition> {
    if max_segment_size < 1 {
        return Err(Error::InvalidArgument(
            "max_segment_size must be >= 1".into(),
        ));
    }
    let segments = ds
        .transactions()
        .chunks(max_segment_size)
        .enumerate()
        .map(|(i, chunk)| Segment::new(i as u64, i as u64, chunk.to_vec()))
        .collect();
    Ok(Partition {
        strategy: PartitionStrategy::Sequential {
            max_segment_size: max_segment_size as u64,
        },
        segments,
    })
}

/// Splits into `k` consecutive slices whose sizes differ by at most one
/// (fewer than `k` only when the dataset has fewer than `k` transactions).
/// The first `n mod k` segments receive the extra transaction.
pub fn partition_count(ds: &TransactionDataset, k: usize) -> Result<Partition> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let n = ds.len();
    let strategy = PartitionStrategy::CountBalanced { k: k as u64 };
    if n == 0 {
        return Ok(Partition {
            strategy,
            segments: Vec::new(),
        });
    }
    let k = k.min(n);
    let base = n / k;
    let extra = n % k;
    let mut segments = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let slice = &ds.transactions()[start..start + size];
        segments.push(Segment::new(i as u64, i as u64, slice.to_vec()));
        start += size;
    }
    Ok(Partition { strategy, segments })
}
