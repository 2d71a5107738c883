//! Fusing per-segment local patterns into global estimates, and classifying
//! patterns as global, exceptional, or trend patterns.
//!
//! A pattern that is locally infrequent in a segment is simply absent from
//! that segment's pattern set, so its exact global support cannot be
//! recovered. Synthesis therefore produces an interval: the lower bound
//! treats unreported supports as 0, the upper bound as the largest support
//! strictly below minsupport for that segment size. When a pattern is
//! reported in every segment the interval collapses to the exact global
//! support, in rational arithmetic with zero tolerance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{ItemSet, PatternSet};
use crate::rational::{Rational, SupportThreshold};

/// Point-estimate policy for supports that were unreported in a segment.
/// Bounds are unaffected; this only picks the scalar inside the interval.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub enum MissingSupportPolicy {
    LowerBound,
    UpperBound,
    #[default]
    Midpoint,
}

/// Classification outcome for a synthesized pattern.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PatternLabel {
    /// Frequent in many segments and above minsupport globally.
    Global,
    /// High support confined to few segments.
    Exceptional,
    /// Support moves monotonically across time-ordered segments.
    Trend,
    Other,
}

/// Thresholds behind the pattern taxonomy. The defaults quantify the
/// qualitative "many segments" / "few segments" reading: a global pattern
/// covers at least half the segments, an exceptional one at most a fifth of
/// them with at least double-minsupport somewhere.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub minsupport: SupportThreshold,
    /// θ_g: minimum fraction of segments a Global pattern must cover.
    pub global_coverage_fraction: Rational,
    /// μ: multiple of minsupport an Exceptional pattern must hit somewhere.
    pub exceptional_support_multiplier: Rational,
    /// θ_e: maximum fraction of segments an Exceptional pattern may cover.
    pub exceptional_coverage_fraction: Rational,
    /// Minimum |least-squares slope| (support per segment step) for Trend.
    pub trend_min_slope: Rational,
    /// Minimum |Spearman rank correlation| with segment ordinals for Trend.
    pub trend_min_rank_corr: Rational,
    pub missing_support_policy: MissingSupportPolicy,
}

impl SynthesisConfig {
    pub fn new(minsupport: SupportThreshold) -> Self {
        SynthesisConfig {
            minsupport,
            global_coverage_fraction: Rational::new(1, 2),
            exceptional_support_multiplier: Rational::new(2, 1),
            exceptional_coverage_fraction: Rational::new(1, 5),
            trend_min_slope: Rational::new(1, 20),
            trend_min_rank_corr: Rational::new(4, 5),
            missing_support_policy: MissingSupportPolicy::Midpoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Rational::zero();
        let one = Rational::one();
        if self.global_coverage_fraction <= zero || self.global_coverage_fraction > one {
            return Err(Error::InvalidArgument(
                "global_coverage_fraction must be in (0, 1]".into(),
            ));
        }
        if self.exceptional_coverage_fraction <= zero || self.exceptional_coverage_fraction >= one {
            return Err(Error::InvalidArgument(
                "exceptional_coverage_fraction must be in (0, 1)".into(),
            ));
        }
        if self.exceptional_coverage_fraction >= self.global_coverage_fraction {
            return Err(Error::InvalidArgument(
                "exceptional_coverage_fraction must be below global_coverage_fraction".into(),
            ));
        }
        if self.exceptional_support_multiplier <= one {
            return Err(Error::InvalidArgument(
                "exceptional_support_multiplier must be > 1".into(),
            ));
        }
        if self.trend_min_slope <= zero {
            return Err(Error::InvalidArgument(
                "trend_min_slope must be positive".into(),
            ));
        }
        if self.trend_min_rank_corr <= zero || self.trend_min_rank_corr > one {
            return Err(Error::InvalidArgument(
                "trend_min_rank_corr must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// One itemset fused across segments.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SynthesizedPattern {
    pub items: ItemSet,
    /// Number of segments where the pattern was locally frequent.
    pub coverage: u64,
    pub support_lower: Rational,
    pub support_upper: Rational,
    pub support_estimate: Rational,
    /// Reported local support per ordinal; `None` where locally infrequent.
    pub per_segment_supports: Vec<Option<Rational>>,
    pub label: PatternLabel,
}

impl SynthesizedPattern {
    pub fn max_reported_support(&self) -> Option<&Rational> {
        self.per_segment_supports.iter().flatten().max()
    }
}

/// The synthesized view of a partitioned mining run: every itemset locally
/// frequent in at least one segment, with bounds, estimate, and label.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub segment_count: u64,
    pub segment_sizes: Vec<u64>,
    pub config: SynthesisConfig,
    /// Sorted lexicographically by itemset.
    pub patterns: Vec<SynthesizedPattern>,
}

impl SynthesisReport {
    pub fn pattern(&self, items: &[u32]) -> Option<&SynthesizedPattern> {
        self.patterns
            .binary_search_by(|p| p.items.as_slice().cmp(items))
            .ok()
            .map(|i| &self.patterns[i])
    }

    pub fn globals(&self) -> impl Iterator<Item = &SynthesizedPattern> {
        self.patterns
            .iter()
            .filter(|p| p.label == PatternLabel::Global)
    }

    pub fn total_size(&self) -> u64 {
        self.segment_sizes.iter().sum()
    }
}

/// A local view entering synthesis: segment size plus reported supports.
/// Pattern sets convert losslessly; multisource fusion also builds fragments
/// from child report estimates, which are rationals but not exact counts.
#[derive(Clone, Debug)]
pub(crate) struct LocalFragment {
    pub size: u64,
    pub supports: BTreeMap<ItemSet, Rational>,
}

impl LocalFragment {
    pub fn from_pattern_set(ps: &PatternSet) -> Self {
        LocalFragment {
            size: ps.segment_size(),
            supports: ps
                .iter()
                .map(|(items, count)| (items.clone(), Rational::ratio(count, ps.segment_size())))
                .collect(),
        }
    }
}

/// Fuses per-segment pattern sets (ordered by ordinal) into a report.
///
/// With w_i = |D_i| / Σ|D_j|: the lower bound sums w_i·s_i over segments
/// that reported the pattern; the upper bound additionally grants every
/// unreported segment the largest support strictly below minsupport,
/// (⌈minsupport·|D_i|⌉−1)/|D_i|. Labels are left `Other`; see [`classify`].
pub fn synthesize(locals: &[PatternSet], cfg: &SynthesisConfig) -> Result<SynthesisReport> {
    cfg.validate()?;
    if locals.is_empty() {
        return Err(Error::InvalidArgument(
            "synthesis requires at least one segment".into(),
        ));
    }
    for ps in locals {
        if ps.minsupport() != cfg.minsupport {
            return Err(Error::ConfigMismatch {
                segment_id: ps.segment_id(),
                found: ps.minsupport().to_string(),
                expected: cfg.minsupport.to_string(),
            });
        }
    }
    let fragments: Vec<LocalFragment> =
        locals.iter().map(LocalFragment::from_pattern_set).collect();
    synthesize_fragments(&fragments, cfg)
}

pub(crate) fn synthesize_fragments(
    fragments: &[LocalFragment],
    cfg: &SynthesisConfig,
) -> Result<SynthesisReport> {
    let sizes: Vec<u64> = fragments.iter().map(|f| f.size).collect();
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("segment of size zero".into()));
    }
    let total: u64 = sizes.iter().sum();
    let ms = cfg.minsupport;

    // Largest contribution an unreported pattern could make per fragment:
    // w_i * (max infrequent count / size) = max_infrequent_count_i / total.
    let missing_caps: Vec<Rational> = sizes
        .iter()
        .map(|&n| Rational::ratio(ms.max_infrequent_count(n), total))
        .collect();

    let mut universe: BTreeSet<ItemSet> = BTreeSet::new();
    for f in fragments {
        universe.extend(f.supports.keys().cloned());
    }

    let mut patterns = Vec::with_capacity(universe.len());
    for items in universe {
        let mut per_segment = Vec::with_capacity(fragments.len());
        let mut lower = Rational::zero();
        let mut slack = Rational::zero();
        let mut coverage = 0u64;
        for (i, f) in fragments.iter().enumerate() {
            match f.supports.get(&items) {
                Some(s) => {
                    coverage += 1;
                    lower = lower + &(s * &Rational::ratio(f.size, total));
                    per_segment.push(Some(s.clone()));
                }
                None => {
                    slack = slack + &missing_caps[i];
                    per_segment.push(None);
                }
            }
        }
        let upper = &lower + &slack;
        let support_estimate = match cfg.missing_support_policy {
            MissingSupportPolicy::LowerBound => lower.clone(),
            MissingSupportPolicy::UpperBound => upper.clone(),
            MissingSupportPolicy::Midpoint => (&lower + &upper) / Rational::new(2, 1),
        };
        patterns.push(SynthesizedPattern {
            items,
            coverage,
            support_lower: lower,
            support_upper: upper,
            support_estimate,
            per_segment_supports: per_segment,
            label: PatternLabel::Other,
        });
    }

    Ok(SynthesisReport {
        segment_count: fragments.len() as u64,
        segment_sizes: sizes,
        config: cfg.clone(),
        patterns,
    })
}

/// Fills in labels with precedence Global > Exceptional > Trend > Other.
///
/// Global: coverage/k ≥ θ_g and estimate ≥ minsupport. Exceptional: not
/// Global, coverage/k ≤ θ_e, and some reported support ≥ min(1, μ·minsupport).
/// Trend: neither, k ≥ 3, and the per-segment supports (missing → 0) pass
/// both the slope and the rank-correlation thresholds.
pub fn classify(mut report: SynthesisReport, cfg: &SynthesisConfig) -> SynthesisReport {
    let k = report.segment_count;
    let ms = cfg.minsupport.to_rational();
    let exceptional_floor = {
        let raised = &cfg.exceptional_support_multiplier * &ms;
        if raised > Rational::one() {
            Rational::one()
        } else {
            raised
        }
    };

    for p in &mut report.patterns {
        let coverage_fraction = Rational::ratio(p.coverage, k);
        let is_global =
            coverage_fraction >= cfg.global_coverage_fraction && p.support_estimate >= ms;
        if is_global {
            p.label = PatternLabel::Global;
            continue;
        }
        let is_exceptional = coverage_fraction <= cfg.exceptional_coverage_fraction
            && p.max_reported_support()
                .is_some_and(|m| *m >= exceptional_floor);
        if is_exceptional {
            p.label = PatternLabel::Exceptional;
            continue;
        }
        if k >= 3 {
            let ys: Vec<Rational> = p
                .per_segment_supports
                .iter()
                .map(|s| s.clone().unwrap_or_else(Rational::zero))
                .collect();
            let slope = least_squares_slope(&ys);
            if slope.abs() >= cfg.trend_min_slope
                && spearman_abs_at_least(&ys, &cfg.trend_min_rank_corr)
            {
                p.label = PatternLabel::Trend;
                continue;
            }
        }
        p.label = PatternLabel::Other;
    }
    report
}

/// Fraction of the oracle's frequent itemsets recovered as Global patterns.
/// An empty oracle yields 1 (vacuously complete).
pub fn approximation_rate(report: &SynthesisReport, oracle: &PatternSet) -> Rational {
    itemset_approximation_rate(report.globals().map(|p| &p.items), oracle)
}

/// Same rate for any predicted itemset collection (e.g. anytime snapshots).
pub fn itemset_approximation_rate<'a>(
    predicted: impl IntoIterator<Item = &'a ItemSet>,
    oracle: &PatternSet,
) -> Rational {
    if oracle.is_empty() {
        return Rational::one();
    }
    let hits = predicted
        .into_iter()
        .filter(|items| oracle.contains(items))
        .count() as u64;
    Rational::ratio(hits, oracle.len() as u64)
}

/// Least-squares slope of `ys` against ordinals 0..k-1. Zero when k < 2.
pub fn least_squares_slope(ys: &[Rational]) -> Rational {
    let k = ys.len();
    if k < 2 {
        return Rational::zero();
    }
    let x_mean = Rational::new((k as i64) - 1, 2);
    let y_mean = ys.iter().cloned().sum::<Rational>() / Rational::from_int(k as u64);
    let mut num = Rational::zero();
    let mut den = Rational::zero();
    for (i, y) in ys.iter().enumerate() {
        let dx = Rational::from_int(i as u64) - &x_mean;
        num = num + &(&dx * &(y - &y_mean));
        den = den + &(&dx * &dx);
    }
    num / den
}

/// Exact test of |Spearman rank correlation| ≥ threshold between `ys` and
/// their ordinals, with average ranks for ties. Avoids the square root by
/// comparing cov² against t²·var_x·var_y. A constant series fails the test.
pub fn spearman_abs_at_least(ys: &[Rational], threshold: &Rational) -> bool {
    let k = ys.len();
    if k < 2 {
        return false;
    }
    let y_ranks = average_ranks(ys);
    // Ordinal ranks are 1..k; both rank vectors have mean (k+1)/2.
    let mean = Rational::new(k as i64 + 1, 2);
    let mut cov = Rational::zero();
    let mut var_x = Rational::zero();
    let mut var_y = Rational::zero();
    for (i, ry) in y_ranks.iter().enumerate() {
        let dx = Rational::from_int(i as u64 + 1) - &mean;
        let dy = ry - &mean;
        cov = cov + &(&dx * &dy);
        var_x = var_x + &(&dx * &dx);
        var_y = var_y + &(&dy * &dy);
    }
    if var_y.is_zero() {
        return false;
    }
    &cov * &cov >= &(threshold * threshold) * &(&var_x * &var_y)
}

/// 1-based ranks with ties assigned the average of their positions.
fn average_ranks(ys: &[Rational]) -> Vec<Rational> {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].cmp(&ys[b]).then(a.cmp(&b)));
    let mut ranks = vec![Rational::zero(); ys.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && ys[order[j + 1]] == ys[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average rank.
        let avg = Rational::new((i + j) as i64 + 2, 2);
        for &idx in &order[i..=j] {
            ranks[idx] = avg.clone();
        }
        i = j + 1;
    }
    ranks
}
