//! Local pattern analysis over a tree of data sources.
//!
//! Patterns, never transactions, cross node boundaries: each leaf mines its
//! own dataset (partitioned when a segment bound is configured), and each
//! interior node fuses the Global-labeled patterns reported by its children
//! together with patterns mined from its own dataset, if it has one. Pooled
//! totals can destroy per-source structure, so alongside fusion there is a
//! structural vote over per-source outcomes, and sources can be clustered by
//! the similarity of their frequent itemsets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::partition_sequential;
use crate::dataset::{load_dataset, TransactionDataset};
use crate::error::{Error, Result};
use crate::miner::{mine_centralized, mine_partition, PatternSet};
use crate::rational::{Rational, SupportThreshold};
use crate::synthesis::{
    classify, synthesize, synthesize_fragments, LocalFragment, SynthesisConfig, SynthesisReport,
};

/// A node in the source tree. Leaves hold datasets; interior nodes may or
/// may not have one of their own.
#[derive(Clone, Debug)]
pub struct SourceNode {
    pub node_id: String,
    pub dataset: Option<TransactionDataset>,
    pub children: Vec<SourceNode>,
}

impl SourceNode {
    pub fn leaf(node_id: impl Into<String>, dataset: TransactionDataset) -> Self {
        SourceNode {
            node_id: node_id.into(),
            dataset: Some(dataset),
            children: Vec::new(),
        }
    }

    pub fn interior(node_id: impl Into<String>, children: Vec<SourceNode>) -> Self {
        SourceNode {
            node_id: node_id.into(),
            dataset: None,
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn check_unique_ids(&self) -> Result<()> {
        fn walk<'a>(node: &'a SourceNode, seen: &mut BTreeSet<&'a str>) -> Result<()> {
            if !seen.insert(&node.node_id) {
                return Err(Error::DuplicateNodeId(node.node_id.clone()));
            }
            node.children.iter().try_for_each(|c| walk(c, seen))
        }
        walk(self, &mut BTreeSet::new())
    }
}

/// Fusion parameters: the synthesis thresholds plus the in-memory segment
/// bound used when mining an individual node's dataset.
#[derive(Clone, Debug)]
pub struct FuseConfig {
    pub synthesis: SynthesisConfig,
    /// Partition a node's dataset into segments of at most this many
    /// transactions before mining; `None` mines it as a single segment.
    pub max_segment_size: Option<usize>,
}

impl FuseConfig {
    pub fn new(synthesis: SynthesisConfig) -> Self {
        FuseConfig {
            synthesis,
            max_segment_size: None,
        }
    }
}

/// What a fusion run did: the report at every node, and how many transactions
/// were read per node. The privacy contract is that a node reads exactly its
/// own dataset and nothing else.
#[derive(Clone, Debug, Default)]
pub struct FuseTrace {
    pub reports: BTreeMap<String, SynthesisReport>,
    pub transactions_read: BTreeMap<String, u64>,
}

/// Fuses the tree bottom-up and returns the root-level report.
pub fn fuse_node(node: &SourceNode, cfg: &FuseConfig) -> Result<SynthesisReport> {
    fuse_node_traced(node, cfg).map(|(report, _)| report)
}

/// As [`fuse_node`], also returning per-node reports and read counts.
pub fn fuse_node_traced(
    node: &SourceNode,
    cfg: &FuseConfig,
) -> Result<(SynthesisReport, FuseTrace)> {
    cfg.synthesis.validate()?;
    node.check_unique_ids()?;
    let (report, _subtree_size, trace) = fuse_rec(node, cfg)?;
    Ok((report, trace))
}

/// Post-order fusion. Subtrees are independent, so children recurse in
/// parallel; their traces merge in child order so the result is identical
/// regardless of thread count. Returns the node's report, the number of
/// transactions in its subtree (its weight at the parent), and the trace.
fn fuse_rec(node: &SourceNode, cfg: &FuseConfig) -> Result<(SynthesisReport, u64, FuseTrace)> {
    let mut trace = FuseTrace::default();
    trace.transactions_read.insert(node.node_id.clone(), 0);

    if node.is_leaf() {
        let ds = node
            .dataset
            .as_ref()
            .ok_or_else(|| Error::LeafWithoutData(node.node_id.clone()))?;
        let report = mine_own_dataset(node, ds, cfg, &mut trace)?;
        let size = ds.len() as u64;
        trace.reports.insert(node.node_id.clone(), report.clone());
        return Ok((report, size, trace));
    }

    // Children first; each contributes its Global patterns as one fragment
    // weighted by its subtree size.
    let child_results: Vec<(SynthesisReport, u64, FuseTrace)> = node
        .children
        .par_iter()
        .map(|child| fuse_rec(child, cfg))
        .collect::<Result<_>>()?;
    let mut fragments = Vec::with_capacity(child_results.len() + 1);
    let mut subtree_size = 0u64;
    for (child_report, child_size, child_trace) in child_results {
        subtree_size += child_size;
        fragments.push(LocalFragment {
            size: child_size,
            supports: child_report
                .globals()
                .map(|p| (p.items.clone(), p.support_estimate.clone()))
                .collect(),
        });
        trace.reports.extend(child_trace.reports);
        trace
            .transactions_read
            .extend(child_trace.transactions_read);
    }
    if let Some(ds) = &node.dataset {
        let own_report = mine_own_dataset(node, ds, cfg, &mut trace)?;
        subtree_size += ds.len() as u64;
        fragments.push(LocalFragment {
            size: ds.len() as u64,
            supports: own_report
                .globals()
                .map(|p| (p.items.clone(), p.support_estimate.clone()))
                .collect(),
        });
    }

    let report = classify(
        synthesize_fragments(&fragments, &cfg.synthesis)?,
        &cfg.synthesis,
    );
    trace.reports.insert(node.node_id.clone(), report.clone());
    Ok((report, subtree_size, trace))
}

/// Mines a node's own dataset through the partitioned pipeline and counts
/// the transactions read.
fn mine_own_dataset(
    node: &SourceNode,
    ds: &TransactionDataset,
    cfg: &FuseConfig,
    trace: &mut FuseTrace,
) -> Result<SynthesisReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} ({})",
            node.node_id,
            ds.source_name()
        )));
    }
    *trace
        .transactions_read
        .entry(node.node_id.clone())
        .or_insert(0) += ds.len() as u64;
    let segment_size = cfg.max_segment_size.unwrap_or(ds.len()).max(1);
    let partition = partition_sequential(ds, segment_size)?;
    let locals = mine_partition(&partition, cfg.synthesis.minsupport)?;
    Ok(classify(
        synthesize(&locals, &cfg.synthesis)?,
        &cfg.synthesis,
    ))
}

/// Outcome side of a structural or pooled comparison.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Tie,
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Winner::A => write!(f, "A"),
            Winner::B => write!(f, "B"),
            Winner::Tie => write!(f, "Tie"),
        }
    }
}

/// Per-source score pairs for a two-sided contest.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScoredContest {
    pairs: Vec<(u64, u64)>,
}

impl ScoredContest {
    pub fn new(pairs: Vec<(u64, u64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "a contest needs at least one score pair".into(),
            ));
        }
        Ok(ScoredContest { pairs })
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }
}

/// Structural vs pooled aggregation of a contest.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VoteOutcome {
    /// Winner by per-source wins (the structural reading).
    pub winner: Winner,
    pub per_source_wins: (u64, u64),
    /// Componentwise score totals (the pooled reading).
    pub pooled: (u64, u64),
    pub pooled_winner: Winner,
}

/// Aggregates a contest both ways. Per-source ties contribute to neither
/// tally; equal win counts (or equal pooled totals) give a tie. The two
/// readings can disagree, which is exactly the structural information pooled
/// totals destroy.
pub fn structural_vote(contest: &ScoredContest) -> VoteOutcome {
    let mut wins = (0u64, 0u64);
    let mut pooled = (0u64, 0u64);
    for &(a, b) in contest.pairs() {
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => wins.0 += 1,
            std::cmp::Ordering::Less => wins.1 += 1,
            std::cmp::Ordering::Equal => {}
        }
        pooled.0 += a;
        pooled.1 += b;
    }
    let decide = |x: u64, y: u64| match x.cmp(&y) {
        std::cmp::Ordering::Greater => Winner::A,
        std::cmp::Ordering::Less => Winner::B,
        std::cmp::Ordering::Equal => Winner::Tie,
    };
    VoteOutcome {
        winner: decide(wins.0, wins.1),
        per_source_wins: wins,
        pooled,
        pooled_winner: decide(pooled.0, pooled.1),
    }
}

/// A partition of source node ids into similarity clusters.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SourceClustering {
    pub similarity_threshold: Rational,
    /// Each cluster sorted by node id; clusters sorted by first member.
    pub clusters: Vec<Vec<String>>,
}

/// Clusters leaves by the Jaccard similarity of their frequent itemsets:
/// edges where similarity ≥ threshold, clusters = connected components.
/// Deterministic and invariant under input order.
pub fn cluster_sources(
    leaves: &[SourceNode],
    t: SupportThreshold,
    similarity_threshold: Rational,
) -> Result<SourceClustering> {
    if leaves.is_empty() {
        return Err(Error::EmptyTree);
    }
    if similarity_threshold < Rational::zero() || similarity_threshold > Rational::one() {
        return Err(Error::InvalidArgument(
            "similarity_threshold must be in [0, 1]".into(),
        ));
    }
    let datasets: Vec<&TransactionDataset> = leaves
        .iter()
        .map(|leaf| {
            leaf.dataset
                .as_ref()
                .ok_or_else(|| Error::LeafWithoutData(leaf.node_id.clone()))
        })
        .collect::<Result<_>>()?;
    let mined: Vec<PatternSet> = datasets
        .par_iter()
        .map(|ds| mine_centralized(ds, t))
        .collect::<Result<_>>()?;
    let itemsets: Vec<BTreeSet<&crate::miner::ItemSet>> =
        mined.iter().map(|ps| ps.itemsets().collect()).collect();

    let mut dsu = DisjointSet::new(leaves.len());
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            if jaccard(&itemsets[i], &itemsets[j]) >= similarity_threshold {
                dsu.union(i, j);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, leaf) in leaves.iter().enumerate() {
        groups
            .entry(dsu.find(i))
            .or_default()
            .push(leaf.node_id.clone());
    }
    let mut clusters: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    clusters.sort();
    Ok(SourceClustering {
        similarity_threshold,
        clusters,
    })
}

/// Jaccard index of two itemset collections; two empty collections count as
/// identical (similarity 1).
fn jaccard(a: &BTreeSet<&crate::miner::ItemSet>, b: &BTreeSet<&crate::miner::ItemSet>) -> Rational {
    if a.is_empty() && b.is_empty() {
        return Rational::one();
    }
    let intersection = a.intersection(b).count() as u64;
    let union = (a.len() + b.len()) as u64 - intersection;
    Rational::ratio(intersection, union)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

// --- tree description file ---------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeNodeDesc {
    node_id: String,
    #[serde(default)]
    dataset_path: Option<String>,
    #[serde(default)]
    children: Vec<TreeNodeDesc>,
}

/// Loads a source tree from a JSON description:
/// `{node_id, dataset_path?, children:[...]}`. Dataset paths are resolved
/// relative to the description file's directory.
pub fn load_source_tree(path: impl AsRef<Path>) -> Result<SourceNode> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    if text.trim().is_empty() {
        return Err(Error::EmptyTree);
    }
    let desc: TreeNodeDesc = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let node = build_node(&desc, base)?;
    node.check_unique_ids()?;
    Ok(node)
}

fn build_node(desc: &TreeNodeDesc, base: &Path) -> Result<SourceNode> {
    let dataset = desc
        .dataset_path
        .as_ref()
        .map(|rel| {
            let p = base.join(rel);
            load_dataset(p)
        })
        .transpose()?;
    let children = desc
        .children
        .iter()
        .map(|c| build_node(c, base))
        .collect::<Result<Vec<_>>>()?;
    Ok(SourceNode {
        node_id: desc.node_id.clone(),
        dataset,
        children,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Transaction;
    use crate::synthesis::PatternLabel;

    fn ds(name: &str, rows: &[&[u32]]) -> TransactionDataset {
        TransactionDataset::new(
            name,
            rows.iter().map(|r| Transaction::new(r.to_vec())).collect(),
        )
    }

    fn t(num: u64, den: u64) -> SupportThreshold {
        SupportThreshold::new(num, den).unwrap()
    }

    fn cfg(num: u64, den: u64) -> FuseConfig {
        FuseConfig::new(SynthesisConfig::new(t(num, den)))
    }

    #[test]
    fn tennis_example_structural_and_pooled_disagree() {
        let contest = ScoredContest::new(vec![(6, 4), (0, 6), (6, 4)]).unwrap();
        let outcome = structural_vote(&contest);
        assert_eq!(outcome.winner, Winner::A);
        assert_eq!(outcome.per_source_wins, (2, 1));
        assert_eq!(outcome.pooled, (12, 14));
        assert_eq!(outcome.pooled_winner, Winner::B);
    }

    #[test]
    fn single_source_vote_cannot_disagree() {
        let contest = ScoredContest::new(vec![(6, 4)]).unwrap();
        let outcome = structural_vote(&contest);
        assert_eq!(outcome.winner, Winner::A);
        assert_eq!(outcome.pooled_winner, Winner::A);
    }

    #[test]
    fn tied_pairs_drop_from_both_tallies() {
        let contest = ScoredContest::new(vec![(5, 5), (3, 1)]).unwrap();
        let outcome = structural_vote(&contest);
        assert_eq!(outcome.per_source_wins, (1, 0));
        assert_eq!(outcome.winner, Winner::A);
        assert_eq!(outcome.pooled, (8, 6));
        assert_eq!(outcome.pooled_winner, Winner::A);
    }

    #[test]
    fn empty_contest_is_rejected() {
        assert!(ScoredContest::new(vec![]).is_err());
    }

    #[test]
    fn single_leaf_fusion_equals_centralized_mining() {
        let data = ds("leaf", &[&[1, 2], &[1, 2], &[1, 3], &[2]]);
        let node = SourceNode::leaf("root", data.clone());
        let report = fuse_node(&node, &cfg(1, 2)).unwrap();
        let oracle = mine_centralized(&data, t(1, 2)).unwrap();
        assert_eq!(report.patterns.len(), oracle.len());
        for (items, count) in oracle.iter() {
            let p = report.pattern(items).unwrap();
            assert_eq!(p.support_estimate, Rational::ratio(count, 4));
            assert_eq!(p.label, PatternLabel::Global);
        }
    }

    #[test]
    fn identical_leaves_fuse_symmetrically() {
        let rows: &[&[u32]] = &[&[1, 2], &[1, 2], &[3]];
        let node = SourceNode::interior(
            "root",
            vec![
                SourceNode::leaf("a", ds("a", rows)),
                SourceNode::leaf("b", ds("b", rows)),
            ],
        );
        let report = fuse_node(&node, &cfg(1, 3)).unwrap();
        for p in &report.patterns {
            assert_eq!(p.coverage, 2);
            assert_eq!(p.support_lower, p.support_upper);
        }
        let p = report.pattern(&[1, 2]).unwrap();
        assert_eq!(p.support_estimate, Rational::new(2, 3));
    }

    #[test]
    fn leaf_without_dataset_is_an_error() {
        let node = SourceNode::interior(
            "root",
            vec![SourceNode {
                node_id: "bad".into(),
                dataset: None,
                children: vec![],
            }],
        );
        match fuse_node(&node, &cfg(1, 2)) {
            Err(Error::LeafWithoutData(id)) => assert_eq!(id, "bad"),
            other => panic!("expected LeafWithoutData, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_node_ids_are_rejected() {
        let rows: &[&[u32]] = &[&[1]];
        let node = SourceNode::interior(
            "x",
            vec![
                SourceNode::leaf("x", ds("a", rows)),
                SourceNode::leaf("y", ds("b", rows)),
            ],
        );
        assert!(matches!(
            fuse_node(&node, &cfg(1, 2)),
            Err(Error::DuplicateNodeId(_))
        ));
    }

    #[test]
    fn trace_counts_reads_per_node() {
        let rows: &[&[u32]] = &[&[1, 2], &[1, 2], &[2]];
        let node = SourceNode::interior(
            "root",
            vec![
                SourceNode::leaf("a", ds("a", rows)),
                SourceNode::leaf("b", ds("b", rows)),
                SourceNode::leaf("c", ds("c", rows)),
            ],
        );
        let (_, trace) = fuse_node_traced(&node, &cfg(1, 2)).unwrap();
        assert_eq!(trace.transactions_read["a"], 3);
        assert_eq!(trace.transactions_read["b"], 3);
        assert_eq!(trace.transactions_read["c"], 3);
        assert_eq!(trace.transactions_read["root"], 0);
        assert_eq!(trace.reports.len(), 4);
    }

    #[test]
    fn interior_node_dataset_joins_the_fusion() {
        let rows: &[&[u32]] = &[&[1], &[1]];
        let node = SourceNode {
            node_id: "root".into(),
            dataset: Some(ds("own", rows)),
            children: vec![SourceNode::leaf("a", ds("a", rows))],
        };
        let (report, trace) = fuse_node_traced(&node, &cfg(1, 2)).unwrap();
        assert_eq!(trace.transactions_read["root"], 2);
        let p = report.pattern(&[1]).unwrap();
        assert_eq!(p.coverage, 2);
        assert_eq!(p.support_estimate, Rational::one());
    }

    #[test]
    fn identical_leaves_form_one_cluster_at_full_threshold() {
        let rows: &[&[u32]] = &[&[1, 2], &[1, 2]];
        let leaves = vec![
            SourceNode::leaf("a", ds("a", rows)),
            SourceNode::leaf("b", ds("b", rows)),
        ];
        let c = cluster_sources(&leaves, t(1, 2), Rational::one()).unwrap();
        assert_eq!(c.clusters, vec![vec!["a".to_string(), "b".to_string()]]);
    }

    #[test]
    fn disjoint_alphabets_split_into_clusters() {
        let leaves = vec![
            SourceNode::leaf("a", ds("a", &[&[1, 2], &[1, 2]])),
            SourceNode::leaf("b", ds("b", &[&[8, 9], &[8, 9]])),
        ];
        let c = cluster_sources(&leaves, t(1, 2), Rational::new(1, 10)).unwrap();
        assert_eq!(c.clusters.len(), 2);
    }

    #[test]
    fn out_of_range_similarity_threshold_is_rejected() {
        let leaves = vec![SourceNode::leaf("a", ds("a", &[&[1]]))];
        assert!(matches!(
            cluster_sources(&leaves, t(1, 2), Rational::new(3, 2)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn clustering_is_input_order_invariant() {
        let mk = |name: &str, rows: &[&[u32]]| SourceNode::leaf(name, ds(name, rows));
        let a = mk("a", &[&[1, 2], &[1, 3]]);
        let b = mk("b", &[&[1, 2], &[1, 3]]);
        let c = mk("c", &[&[7], &[8]]);
        let fwd = cluster_sources(
            &[a.clone(), b.clone(), c.clone()],
            t(1, 2),
            Rational::new(1, 2),
        )
        .unwrap();
        let rev = cluster_sources(&[c, b, a], t(1, 2), Rational::new(1, 2)).unwrap();
        assert_eq!(fwd, rev);
    }
}
