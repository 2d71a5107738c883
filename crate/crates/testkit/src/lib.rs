//! Test oracles and seeded fixture generators shared by the test suites.
//!
//! The brute-force miner here is the independent oracle the mining pipeline
//! is checked against: it enumerates every itemset over the distinct items
//! present and counts containment directly, sharing no code with the
//! level-wise miner.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use segmine_core::dataset::{Segment, Transaction, TransactionDataset};
use segmine_core::miner::ItemSet;
use segmine_core::rational::SupportThreshold;
use segmine_core::synthesis::SynthesisConfig;

/// Exhaustive frequent-itemset enumeration over at most 20 distinct items.
/// Returns itemset -> exact count for every itemset whose support clears the
/// threshold, using the direct integer comparison count*den >= num*n.
pub fn brute_force_mine(
    transactions: &[Transaction],
    threshold: SupportThreshold,
) -> BTreeMap<ItemSet, u64> {
    let mut items: Vec<u32> = transactions
        .iter()
        .flat_map(|t| t.items().iter().copied())
        .collect();
    items.sort_unstable();
    items.dedup();
    assert!(
        items.len() <= 20,
        "brute force oracle limited to 20 distinct items, got {}",
        items.len()
    );

    let masks: Vec<u32> = transactions
        .iter()
        .map(|t| {
            t.items()
                .iter()
                .map(|item| 1u32 << items.binary_search(item).unwrap())
                .sum()
        })
        .collect();

    let n = transactions.len() as u64;
    let (num, den) = (threshold.numer() as u128, threshold.denom() as u128);
    let mut out = BTreeMap::new();
    for subset in 1u32..(1 << items.len()) {
        let count = masks.iter().filter(|&&m| m & subset == subset).count() as u64;
        if (count as u128) * den >= num * (n as u128) {
            let itemset: ItemSet = (0..items.len())
                .filter(|&i| subset & (1 << i) != 0)
                .map(|i| items[i])
                .collect();
            out.insert(itemset, count);
        }
    }
    out
}

/// Bitmask-backed exact containment counter over at most 20 distinct items,
/// for checking true supports of arbitrary itemsets without the miner.
pub struct ExactCounter {
    items: Vec<u32>,
    masks: Vec<u32>,
}

impl ExactCounter {
    pub fn new(transactions: &[Transaction]) -> Self {
        let mut items: Vec<u32> = transactions
            .iter()
            .flat_map(|t| t.items().iter().copied())
            .collect();
        items.sort_unstable();
        items.dedup();
        assert!(items.len() <= 20, "exact counter limited to 20 items");
        let masks = transactions
            .iter()
            .map(|t| {
                t.items()
                    .iter()
                    .map(|item| 1u32 << items.binary_search(item).unwrap())
                    .sum()
            })
            .collect();
        ExactCounter { items, masks }
    }

    pub fn count(&self, itemset: &[u32]) -> u64 {
        let mut subset = 0u32;
        for item in itemset {
            match self.items.binary_search(item) {
                Ok(i) => subset |= 1 << i,
                Err(_) => return 0, // item never occurs
            }
        }
        self.masks.iter().filter(|&&m| m & subset == subset).count() as u64
    }
}

/// A seeded random dataset: up to `max_transactions` rows over up to
/// `max_items` distinct items, with per-item inclusion probabilities drawn
/// once per dataset so that some itemsets are actually frequent.
pub fn random_dataset(seed: u64, max_transactions: usize, max_items: u32) -> TransactionDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_transactions);
    let item_count = rng.gen_range(1..=max_items);
    let probs: Vec<f64> = (0..item_count).map(|_| rng.gen_range(0.05..0.9)).collect();
    let transactions = (0..n)
        .map(|_| {
            let items: Vec<u32> = (0..item_count)
                .filter(|&i| rng.gen_bool(probs[i as usize]))
                .collect();
            Transaction::new(items)
        })
        .collect();
    TransactionDataset::new(format!("random-{seed}"), transactions)
}

/// As [`random_dataset`] but with exactly the requested shape.
pub fn random_dataset_of(seed: u64, transactions: usize, items: u32) -> TransactionDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let probs: Vec<f64> = (0..items).map(|_| rng.gen_range(0.05..0.9)).collect();
    let rows = (0..transactions)
        .map(|_| {
            let row: Vec<u32> = (0..items)
                .filter(|&i| rng.gen_bool(probs[i as usize]))
                .collect();
            Transaction::new(row)
        })
        .collect();
    TransactionDataset::new(format!("random-{seed}-{transactions}x{items}"), rows)
}

/// Concatenates segments in ordinal order back into one dataset.
pub fn pool_segments(name: &str, segments: &[Segment]) -> TransactionDataset {
    let transactions = segments
        .iter()
        .flat_map(|s| s.transactions().iter().cloned())
        .collect();
    TransactionDataset::new(name.to_string(), transactions)
}

/// A segmented fixture with one pattern planted per taxonomy label.
pub struct PlantedFixture {
    pub segments: Vec<Segment>,
    pub config: SynthesisConfig,
    /// Planted at support 0.6 in every segment: must classify Global.
    pub global_itemset: ItemSet,
    /// Planted at support 0.9 in exactly one of the k segments: Exceptional.
    pub exceptional_itemset: ItemSet,
    /// Support ramps across segments, crossing minsupport midway: Trend.
    pub trend_itemset: ItemSet,
}

/// Builds the planted fixture: k = 8 segments of 100 transactions at
/// minsupport 0.2 with default taxonomy thresholds. The seed shuffles which
/// transactions carry each planted itemset; the per-segment counts (and so
/// every support entering classification) are fixed by construction.
pub fn planted_taxonomy_fixture(seed: u64) -> PlantedFixture {
    const K: usize = 8;
    const N: usize = 100;
    const GLOBAL_COUNT: usize = 60;
    const EXCEPTIONAL_SEGMENT: usize = 3;
    const EXCEPTIONAL_COUNT: usize = 90;
    // Below minsupport (20) through segment 4, then well above it.
    const TREND_COUNTS: [usize; K] = [2, 5, 8, 11, 14, 45, 60, 75];

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let config = SynthesisConfig::new(SupportThreshold::new(1, 5).unwrap());

    let mut segments = Vec::with_capacity(K);
    for (seg_idx, &trend_count) in TREND_COUNTS.iter().enumerate() {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); N];
        for i in sample(&mut rng, N, GLOBAL_COUNT) {
            rows[i].extend([0, 1]);
        }
        if seg_idx == EXCEPTIONAL_SEGMENT {
            for i in sample(&mut rng, N, EXCEPTIONAL_COUNT) {
                rows[i].extend([2, 3]);
            }
        }
        for i in sample(&mut rng, N, trend_count) {
            rows[i].extend([4, 5]);
        }
        for row in &mut rows {
            for noise_item in 6..12u32 {
                if rng.gen_bool(0.15) {
                    row.push(noise_item);
                }
            }
        }
        segments.push(Segment::new(
            seg_idx as u64,
            seg_idx as u64,
            rows.into_iter().map(Transaction::new).collect(),
        ));
    }

    PlantedFixture {
        segments,
        config,
        global_itemset: vec![0, 1],
        exceptional_itemset: vec![2, 3],
        trend_itemset: vec![4, 5],
    }
}

/// The fixed dataset used by anytime-convergence tests: 400 transactions
/// over 10 items with a stable support gradient.
pub fn anytime_fixture_dataset() -> TransactionDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5E6_3141);
    let probs = [0.72, 0.64, 0.58, 0.52, 0.47, 0.41, 0.36, 0.31, 0.22, 0.12];
    let transactions = (0..400)
        .map(|_| {
            let items: Vec<u32> = (0..probs.len() as u32)
                .filter(|&i| rng.gen_bool(probs[i as usize]))
                .collect();
            Transaction::new(items)
        })
        .collect();
    TransactionDataset::new("anytime-fixture", transactions)
}
