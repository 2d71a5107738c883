//! Dynamic hot/warm/cold tiering of records by visiting frequency.
//!
//! The three tiers are cut at fixed fractions of the record universe
//! (defaults 5% / 30% / 65%) from a per-window ranking of access counts.
//! Epoch 0 is a seeded random assignment for when nothing is known about the
//! workload yet; every later epoch is rebuilt from that window's counts
//! alone, replacing rather than adjusting the previous assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A sequence of (record id, timestamp) access events with non-decreasing
/// timestamps.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AccessLog {
    events: Vec<(u64, u64)>,
}

impl AccessLog {
    pub fn from_events(events: Vec<(u64, u64)>) -> Result<Self> {
        if events.windows(2).any(|w| w[0].1 > w[1].1) {
            return Err(Error::InvalidArgument(
                "access log timestamps must be non-decreasing".into(),
            ));
        }
        Ok(AccessLog { events })
    }

    pub fn events(&self) -> &[(u64, u64)] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Loads an access log from CSV lines `record_id,timestamp`. A first line
/// that does not parse as two integers is treated as an optional header;
/// any later malformed line is an error carrying its line number.
pub fn load_access_log(path: impl AsRef<Path>) -> Result<AccessLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut first_content_line = true;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_event(trimmed) {
            Some(ev) => events.push(ev),
            None if first_content_line => {} // optional header
            None => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: format!("expected 'record_id,timestamp', got '{trimmed}'"),
                });
            }
        }
        first_content_line = false;
    }
    AccessLog::from_events(events)
}

fn parse_event(line: &str) -> Option<(u64, u64)> {
    let (a, b) = line.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Tiering parameters. Defaults cut the universe 5% / 30% / 65%.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TierConfig {
    pub hot_fraction: Rational,
    pub warm_fraction: Rational,
    /// Window length in timestamp units; epoch e covers
    /// (e·window_length, (e+1)·window_length].
    pub window_length: u64,
    /// Seed for the epoch-0 random assignment.
    pub seed: u64,
}

impl TierConfig {
    pub fn new(window_length: u64, seed: u64) -> Self {
        TierConfig {
            hot_fraction: Rational::new(1, 20),
            warm_fraction: Rational::new(3, 10),
            window_length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Rational::zero();
        if self.hot_fraction <= zero || self.warm_fraction <= zero {
            return Err(Error::InvalidArgument(
                "tier fractions must be positive".into(),
            ));
        }
        if &self.hot_fraction + &self.warm_fraction >= Rational::one() {
            return Err(Error::InvalidArgument(
                "hot_fraction + warm_fraction must be < 1".into(),
            ));
        }
        if self.window_length < 1 {
            return Err(Error::InvalidArgument("window_length must be >= 1".into()));
        }
        Ok(())
    }

    /// Tier sizes for a universe of `n` records: ceil cuts, clamped so the
    /// three sizes always sum to `n`.
    pub fn tier_sizes(&self, n: u64) -> (u64, u64, u64) {
        let hot = ceil_mul(&self.hot_fraction, n).min(n);
        let warm = ceil_mul(&self.warm_fraction, n).min(n - hot);
        (hot, warm, n - hot - warm)
    }
}

fn ceil_mul(fraction: &Rational, n: u64) -> u64 {
    use num_traits::ToPrimitive;
    let scaled = fraction * &Rational::from_int(n);
    let num = scaled.numer();
    let den = scaled.denom();
    let q = num / den;
    let r = num % den;
    let ceil = if r == num_bigint::BigInt::from(0) {
        q
    } else {
        q + 1
    };
    ceil.to_u64().unwrap_or(u64::MAX)
}

/// One epoch's hot/warm/cold partition of the record universe.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TierAssignment {
    pub epoch: u64,
    pub hot: BTreeSet<u64>,
    pub warm: BTreeSet<u64>,
    pub cold: BTreeSet<u64>,
}

impl TierAssignment {
    pub fn universe_size(&self) -> u64 {
        (self.hot.len() + self.warm.len() + self.cold.len()) as u64
    }

    fn universe(&self) -> BTreeSet<u64> {
        self.hot
            .iter()
            .chain(self.warm.iter())
            .chain(self.cold.iter())
            .copied()
            .collect()
    }

    fn from_ranked(epoch: u64, ranked: Vec<u64>, cfg: &TierConfig) -> TierAssignment {
        let n = ranked.len() as u64;
        let (h, w, _) = cfg.tier_sizes(n);
        let hot: BTreeSet<u64> = ranked[..h as usize].iter().copied().collect();
        let warm: BTreeSet<u64> = ranked[h as usize..(h + w) as usize]
            .iter()
            .copied()
            .collect();
        let cold: BTreeSet<u64> = ranked[(h + w) as usize..].iter().copied().collect();
        TierAssignment {
            epoch,
            hot,
            warm,
            cold,
        }
    }
}

/// Epoch-0 assignment: a seeded shuffle of the universe cut at the tier
/// sizes, for when the workload is not yet known.
pub fn tier_init(record_ids: &BTreeSet<u64>, cfg: &TierConfig) -> Result<TierAssignment> {
    cfg.validate()?;
    if record_ids.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let mut ids: Vec<u64> = record_ids.iter().copied().collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    ids.shuffle(&mut rng);
    Ok(TierAssignment::from_ranked(0, ids, cfg))
}

/// Rebuilds the assignment from one window of accesses: rank by (count
/// descending, record id ascending), cut at the tier sizes, bump the epoch.
/// Records absent from the log count zero; events for unknown record ids are
/// ignored. Events outside (epoch·W, (epoch+1)·W] are rejected.
pub fn tier_update(
    prev: &TierAssignment,
    log: &AccessLog,
    cfg: &TierConfig,
) -> Result<TierAssignment> {
    cfg.validate()?;
    let window_start = prev.epoch * cfg.window_length;
    let window_end = (prev.epoch + 1) * cfg.window_length;
    let universe = prev.universe();
    let mut counts: BTreeMap<u64, u64> = universe.iter().map(|&id| (id, 0)).collect();
    for &(record_id, timestamp) in log.events() {
        if timestamp <= window_start || timestamp > window_end {
            return Err(Error::OutOfWindowEvent {
                record_id,
                timestamp,
                window_start,
                window_end,
            });
        }
        if let Some(c) = counts.get_mut(&record_id) {
            *c += 1;
        }
    }
    let mut ranked: Vec<u64> = universe.into_iter().collect();
    ranked.sort_by(|a, b| counts[b].cmp(&counts[a]).then(a.cmp(b)));
    Ok(TierAssignment::from_ranked(prev.epoch + 1, ranked, cfg))
}

/// Folds [`tier_update`] across per-window logs, emitting every epoch's
/// assignment starting with the epoch-0 initialization.
pub fn tier_run(
    record_ids: &BTreeSet<u64>,
    logs: &[AccessLog],
    cfg: &TierConfig,
) -> Result<Vec<TierAssignment>> {
    let mut assignments = vec![tier_init(record_ids, cfg)?];
    for log in logs {
        let next = tier_update(assignments.last().unwrap(), log, cfg)?;
        assignments.push(next);
    }
    Ok(assignments)
}

/// The ratio (hot + warm) : cold; 7/13 ≈ 0.538 at the default fractions,
/// close to the golden ratio 0.618.
pub fn golden_ratio_check(cfg: &TierConfig) -> Rational {
    let covered = &cfg.hot_fraction + &cfg.warm_fraction;
    let rest = Rational::one() - &covered;
    covered / rest
}
