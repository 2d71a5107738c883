//! In-memory frequent-itemset mining of a single segment.
//!
//! The miner is level-wise Apriori with hash-based candidate counting: the
//! level structure keeps the working set bounded by the widest candidate
//! level, which is the point of mining one memory-sized segment at a time.
//! The contract is the *set* of frequent itemsets with exact counts, so any
//! algorithm producing the identical set is a valid substitute.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Item, Partition, Segment, Transaction, TransactionDataset};
use crate::error::{Error, Result};
use crate::rational::{Rational, SupportThreshold};

/// Sentinel segment id for pattern sets mined over a whole dataset.
pub const WHOLE_DATASET_SEGMENT_ID: i64 = -1;

/// Itemset in canonical form (sorted ascending, no duplicates).
pub type ItemSet = Vec<Item>;

/// Mining options beyond the support threshold.
#[derive(Clone, Copy, Debug, Default)]
pub struct MineOptions {
    /// Upper bound on itemset length; `None` means unlimited.
    pub max_itemset_len: Option<usize>,
}

/// One frequent itemset with its exact count and support.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FrequentPattern {
    pub items: ItemSet,
    pub count: u64,
    pub support: Rational,
}

/// The frequent itemsets of one segment (or of a whole dataset when
/// `segment_id` is [`WHOLE_DATASET_SEGMENT_ID`]).
///
/// Downward closure holds: every non-empty subset of a member is a member.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatternSet {
    segment_id: i64,
    segment_size: u64,
    minsupport: SupportThreshold,
    /// itemset -> count; BTreeMap keeps lexicographic itemset order.
    patterns: std::collections::BTreeMap<ItemSet, u64>,
}

impl PatternSet {
    pub fn segment_id(&self) -> i64 {
        self.segment_id
    }

    pub fn segment_size(&self) -> u64 {
        self.segment_size
    }

    pub fn minsupport(&self) -> SupportThreshold {
        self.minsupport
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, itemset: &[Item]) -> bool {
        self.patterns.contains_key(&canonical(itemset))
    }

    pub fn count_of(&self, itemset: &[Item]) -> Option<u64> {
        self.patterns.get(&canonical(itemset)).copied()
    }

    /// Iterates patterns in lexicographic itemset order.
    pub fn iter(&self) -> impl Iterator<Item = (&ItemSet, u64)> {
        self.patterns.iter().map(|(k, v)| (k, *v))
    }

    pub fn itemsets(&self) -> impl Iterator<Item = &ItemSet> {
        self.patterns.keys()
    }

    /// Materializes patterns in lexicographic order with derived supports.
    pub fn to_patterns(&self) -> Vec<FrequentPattern> {
        self.patterns
            .iter()
            .map(|(items, &count)| FrequentPattern {
                items: items.clone(),
                count,
                support: Rational::ratio(count, self.segment_size),
            })
            .collect()
    }
}

/// Exact support of an itemset if present; `None` means the itemset was below
/// minsupport in that segment (by the mining contract).
pub fn support_of(ps: &PatternSet, itemset: &[Item]) -> Option<Rational> {
    ps.count_of(itemset)
        .map(|c| Rational::ratio(c, ps.segment_size))
}

/// Mines one segment. Errors on an empty segment.
pub fn mine_segment(seg: &Segment, t: SupportThreshold) -> Result<PatternSet> {
    mine_segment_with(seg, t, MineOptions::default())
}

pub fn mine_segment_with(
    seg: &Segment,
    t: SupportThreshold,
    opts: MineOptions,
) -> Result<PatternSet> {
    if seg.is_empty() {
        return Err(Error::EmptySegment(seg.segment_id as i64));
    }
    Ok(mine_transactions(
        seg.segment_id as i64,
        seg.transactions(),
        t,
        opts,
    ))
}

/// Mines the whole dataset at once; the ground truth the partitioned
/// pipeline is compared against.
pub fn mine_centralized(ds: &TransactionDataset, t: SupportThreshold) -> Result<PatternSet> {
    mine_centralized_with(ds, t, MineOptions::default())
}

pub fn mine_centralized_with(
    ds: &TransactionDataset,
    t: SupportThreshold,
    opts: MineOptions,
) -> Result<PatternSet> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.source_name().to_string()));
    }
    Ok(mine_transactions(
        WHOLE_DATASET_SEGMENT_ID,
        ds.transactions(),
        t,
        opts,
    ))
}

/// Mines every segment of a partition. Segments are independent, so they are
/// mined in parallel; results come back in ordinal order regardless of thread
/// count.
pub fn mine_partition(partition: &Partition, t: SupportThreshold) -> Result<Vec<PatternSet>> {
    partition
        .segments()
        .par_iter()
        .map(|seg| mine_segment(seg, t))
        .collect()
}

pub(crate) fn mine_transactions(
    segment_id: i64,
    transactions: &[Transaction],
    t: SupportThreshold,
    opts: MineOptions,
) -> PatternSet {
    let n = transactions.len() as u64;
    let min_count = t.min_frequent_count(n);
    let max_len = opts.max_itemset_len.unwrap_or(usize::MAX).max(1);
    let mut patterns = std::collections::BTreeMap::new();

    // Level 1: direct item counting.
    let mut singles: HashMap<Item, u64> = HashMap::new();
    for tx in transactions {
        for &item in tx.items() {
            *singles.entry(item).or_insert(0) += 1;
        }
    }
    let mut frontier: Vec<ItemSet> = singles
        .iter()
        .filter(|&(_, &c)| c >= min_count)
        .map(|(&item, _)| vec![item])
        .collect();
    frontier.sort_unstable();
    for items in &frontier {
        patterns.insert(items.clone(), singles[&items[0]]);
    }

    // Levels k >= 2: join, prune, count.
    let mut level = 2usize;
    while frontier.len() > 1 && level <= max_len {
        let candidates = generate_candidates(&frontier);
        if candidates.is_empty() {
            break;
        }
        let counts = count_candidates(&candidates, transactions, level);
        frontier = candidates
            .into_iter()
            .zip(counts)
            .filter(|&(_, c)| c >= min_count)
            .map(|(items, count)| {
                patterns.insert(items.clone(), count);
                items
            })
            .collect();
        level += 1;
    }

    PatternSet {
        segment_id,
        segment_size: n,
        minsupport: t,
        patterns,
    }
}

/// Joins frequent (k-1)-itemsets sharing a (k-2)-prefix and prunes candidates
/// with an infrequent (k-1)-subset. `frontier` is sorted lexicographically.
fn generate_candidates(frontier: &[ItemSet]) -> Vec<ItemSet> {
    let prev: HashSet<&[Item]> = frontier.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for i in 0..frontier.len() {
        for j in (i + 1)..frontier.len() {
            let (a, b) = (&frontier[i], &frontier[j]);
            let prefix = a.len() - 1;
            if a[..prefix] != b[..prefix] {
                break; // sorted order: no later b shares the prefix
            }
            let mut candidate = a.clone();
            candidate.push(b[prefix]);
            if all_subsets_frequent(&candidate, &prev) {
                out.push(candidate);
            }
        }
    }
    out
}

fn all_subsets_frequent(candidate: &[Item], prev: &HashSet<&[Item]>) -> bool {
    // The two generating subsets are frequent by construction; checking all
    // len-1 subsets is cheap and prunes the rest.
    let mut sub = Vec::with_capacity(candidate.len() - 1);
    for skip in 0..candidate.len() {
        sub.clear();
        sub.extend(candidate.iter().enumerate().filter_map(
            |(i, &v)| {
                if i == skip {
                    None
                } else {
                    Some(v)
                }
            },
        ));
        if !prev.contains(sub.as_slice()) {
            return false;
        }
    }
    true
}

/// Hash-based candidate counting. Per transaction, either enumerate its
/// k-subsets against the candidate table or scan candidates with a merge
/// containment test, whichever touches fewer itemsets.
fn count_candidates(candidates: &[ItemSet], transactions: &[Transaction], k: usize) -> Vec<u64> {
    let index: HashMap<&[Item], usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_slice(), i))
        .collect();
    let mut counts = vec![0u64; candidates.len()];
    let mut subset = vec![0 as Item; k];
    for tx in transactions {
        let items = tx.items();
        if items.len() < k {
            continue;
        }
        let n_subsets = binomial(items.len(), k);
        if n_subsets <= candidates.len() as u128 {
            for_each_k_subset(items, k, &mut subset, &mut |s| {
                if let Some(&i) = index.get(s) {
                    counts[i] += 1;
                }
            });
        } else {
            for (i, c) in candidates.iter().enumerate() {
                if tx.contains_all(c) {
                    counts[i] += 1;
                }
            }
        }
    }
    counts
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut result: u128 = 1;
    for i in 0..k.min(n - k) {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    result
}

fn for_each_k_subset(items: &[Item], k: usize, buf: &mut [Item], f: &mut impl FnMut(&[Item])) {
    fn rec(
        items: &[Item],
        k: usize,
        start: usize,
        depth: usize,
        buf: &mut [Item],
        f: &mut impl FnMut(&[Item]),
    ) {
        if depth == k {
            f(&buf[..k]);
            return;
        }
        let remaining = k - depth;
        for i in start..=items.len() - remaining {
            buf[depth] = items[i];
            rec(items, k, i + 1, depth + 1, buf, f);
        }
    }
    rec(items, k, 0, 0, buf, f);
}

fn canonical(itemset: &[Item]) -> ItemSet {
    let mut v = itemset.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

// --- serialization ----------------------------------------------------------

impl Serialize for PatternSet {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("PatternSet", 4)?;
        st.serialize_field("segment_id", &self.segment_id)?;
        st.serialize_field("segment_size", &self.segment_size)?;
        st.serialize_field("minsupport", &self.minsupport)?;
        st.serialize_field("patterns", &self.to_patterns())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PatternSet {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            segment_id: i64,
            segment_size: u64,
            minsupport: SupportThreshold,
            patterns: Vec<FrequentPattern>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut patterns = std::collections::BTreeMap::new();
        for p in raw.patterns {
            if p.items.windows(2).any(|w| w[0] >= w[1]) || p.items.is_empty() {
                return Err(serde::de::Error::custom("itemset not in canonical form"));
            }
            if patterns.insert(p.items, p.count).is_some() {
                return Err(serde::de::Error::custom("duplicate itemset"));
            }
        }
        Ok(PatternSet {
            segment_id: raw.segment_id,
            segment_size: raw.segment_size,
            minsupport: raw.minsupport,
            patterns,
        })
    }
}

/// Builds a pattern set directly from (itemset, count) pairs. Used by tests
/// and by fusion code that converts reported patterns back into local views.
pub fn pattern_set_from_counts(
    segment_id: i64,
    segment_size: u64,
    minsupport: SupportThreshold,
    counts: impl IntoIterator<Item = (ItemSet, u64)>,
) -> PatternSet {
    PatternSet {
        segment_id,
        segment_size,
        minsupport,
        patterns: counts
            .into_iter()
            .map(|(items, c)| (canonical(&items), c))
            .collect(),
    }
}
