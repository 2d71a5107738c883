//! Anytime mining: repeated seeded sampling with ensemble integration.
//!
//! Each round draws a uniform sample without replacement, mines it, and folds
//! the sample's frequent itemsets into vote accumulators. The admitted view
//! after round n contains the itemsets frequent in at least
//! `admit_vote_fraction` of the samples so far, with support averaged over
//! the samples where they were frequent. Every round is usable on its own and
//! the view tends toward the centralized answer as rounds accumulate.
//!
//! Round r draws from an RNG stream determined only by (seed, r), so any
//! round is reproducible in isolation and the full run is deterministic.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Transaction, TransactionDataset};
use crate::error::{Error, Result};
use crate::miner::{mine_centralized, WHOLE_DATASET_SEGMENT_ID};
use crate::miner::{mine_transactions, ItemSet, MineOptions, PatternSet};
use crate::rational::{Rational, SupportThreshold};
use crate::synthesis::itemset_approximation_rate;

#[derive(Clone, Debug)]
pub struct AnytimeConfig {
    pub sample_size: usize,
    pub rounds: u32,
    pub seed: u64,
    pub minsupport: SupportThreshold,
    /// Fraction of samples an itemset must be frequent in to be admitted.
    pub admit_vote_fraction: Rational,
}

impl AnytimeConfig {
    pub fn new(sample_size: usize, rounds: u32, seed: u64, minsupport: SupportThreshold) -> Self {
        AnytimeConfig {
            sample_size,
            rounds,
            seed,
            minsupport,
            admit_vote_fraction: Rational::new(1, 2),
        }
    }

    pub fn validate(&self, dataset_size: usize) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::InvalidArgument("rounds must be >= 1".into()));
        }
        if self.sample_size < 1 {
            return Err(Error::InvalidArgument("sample_size must be >= 1".into()));
        }
        if self.sample_size > dataset_size {
            return Err(Error::SampleTooLarge {
                sample_size: self.sample_size,
                dataset_size,
            });
        }
        let zero = Rational::zero();
        let one = Rational::one();
        if self.admit_vote_fraction <= zero || self.admit_vote_fraction > one {
            return Err(Error::InvalidArgument(
                "admit_vote_fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Per-itemset vote accumulator.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Votes {
    times_frequent: u32,
    support_sum: Rational,
}

/// The ensemble after n rounds.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EnsembleState {
    round: u32,
    votes: BTreeMap<ItemSet, Votes>,
}

impl EnsembleState {
    pub fn new() -> Self {
        EnsembleState::default()
    }

    /// Number of completed rounds.
    pub fn round(&self) -> u32 {
        self.round
    }

    /// The admitted view P_n: itemsets frequent in at least
    /// `admit_vote_fraction` of the samples so far, each with the mean
    /// support over the samples where it was frequent. Sorted by itemset.
    pub fn admitted(&self, admit_vote_fraction: &Rational) -> Vec<(ItemSet, Rational)> {
        if self.round == 0 {
            return Vec::new();
        }
        let n = Rational::from_int(self.round as u64);
        self.votes
            .iter()
            .filter(|(_, v)| {
                &Rational::from_int(v.times_frequent as u64) / &n >= *admit_vote_fraction
            })
            .map(|(items, v)| {
                let mean = &v.support_sum / &Rational::from_int(v.times_frequent as u64);
                (items.clone(), mean)
            })
            .collect()
    }

    /// Folds one sample's pattern set into the accumulators.
    fn absorb(&mut self, sample_patterns: &PatternSet) {
        for (items, count) in sample_patterns.iter() {
            let support = Rational::ratio(count, sample_patterns.segment_size());
            let entry = self.votes.entry(items.clone()).or_insert_with(|| Votes {
                times_frequent: 0,
                support_sum: Rational::zero(),
            });
            entry.times_frequent += 1;
            entry.support_sum = &entry.support_sum + &support;
        }
        self.round += 1;
    }
}

/// Draws the sample for round `round_index` (0-based): a sorted index set of
/// `sample_size` positions chosen uniformly without replacement.
pub fn sample_indices(seed: u64, round_index: u32, n: usize, sample_size: usize) -> Vec<usize> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(round_index as u64);
    let mut ids = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
    ids.sort_unstable();
    ids
}

/// Runs one sampling round: draw, mine, fold, recompute the admitted view.
pub fn anytime_round(
    ds: &TransactionDataset,
    state: EnsembleState,
    cfg: &AnytimeConfig,
) -> Result<EnsembleState> {
    anytime_round_traced(ds, state, cfg).map(|(state, _)| state)
}

/// As [`anytime_round`], also returning the drawn sample positions.
pub fn anytime_round_traced(
    ds: &TransactionDataset,
    mut state: EnsembleState,
    cfg: &AnytimeConfig,
) -> Result<(EnsembleState, Vec<usize>)> {
    cfg.validate(ds.len())?;
    if state.round >= cfg.rounds {
        return Err(Error::InvalidArgument(format!(
            "round {} already reached configured rounds {}",
            state.round, cfg.rounds
        )));
    }
    let ids = sample_indices(cfg.seed, state.round, ds.len(), cfg.sample_size);
    let sample: Vec<Transaction> = ids.iter().map(|&i| ds.transactions()[i].clone()).collect();
    let patterns = mine_transactions(
        WHOLE_DATASET_SEGMENT_ID,
        &sample,
        cfg.minsupport,
        MineOptions::default(),
    );
    state.absorb(&patterns);
    Ok((state, ids))
}

/// One line of the run transcript.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RoundReport {
    /// 1-based round number.
    pub round: u32,
    pub sample_ids: Vec<usize>,
    /// Approximation rate of the admitted view against the centralized miner.
    pub rate: Rational,
    pub admitted_count: usize,
}

/// Runs all configured rounds, scoring each admitted view against the
/// centralized miner. Deterministic given (dataset, config).
pub fn anytime_run(ds: &TransactionDataset, cfg: &AnytimeConfig) -> Result<Vec<RoundReport>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.source_name().to_string()));
    }
    cfg.validate(ds.len())?;
    let oracle = mine_centralized(ds, cfg.minsupport)?;
    let mut state = EnsembleState::new();
    let mut reports = Vec::with_capacity(cfg.rounds as usize);
    for _ in 0..cfg.rounds {
        let (next, sample_ids) = anytime_round_traced(ds, state, cfg)?;
        state = next;
        let admitted = state.admitted(&cfg.admit_vote_fraction);
        let rate = itemset_approximation_rate(admitted.iter().map(|(items, _)| items), &oracle);
        reports.push(RoundReport {
            round: state.round,
            sample_ids,
            rate,
            admitted_count: admitted.len(),
        });
    }
    Ok(reports)
}
