//! Mining big transaction datasets through data partitioning.
//!
//! The pipeline: partition a dataset into memory-bounded segments, mine each
//! segment in memory, then synthesize the local patterns into global
//! estimates with sound support bounds and a taxonomy of global, exceptional,
//! and trend patterns. Around that core sit anytime sampling ensembles,
//! multisource pattern fusion over a tree of data sources, and hot/warm/cold
//! tiering of records by visiting frequency.

pub mod anytime;
pub mod dataset;
pub mod error;
pub mod miner;
pub mod multisource;
pub mod rational;
pub mod synthesis;
pub mod tiering;

pub use anytime::{anytime_round, anytime_run, AnytimeConfig, EnsembleState, RoundReport};
pub use dataset::{
    load_dataset, partition_count, partition_sequential, Item, Partition, PartitionStrategy,
    Segment, Transaction, TransactionDataset,
};
pub use error::{Error, Result};
pub use miner::{
    mine_centralized, mine_partition, mine_segment, support_of, FrequentPattern, ItemSet,
    MineOptions, PatternSet, WHOLE_DATASET_SEGMENT_ID,
};
pub use multisource::{
    cluster_sources, fuse_node, fuse_node_traced, load_source_tree, structural_vote, FuseConfig,
    FuseTrace, ScoredContest, SourceClustering, SourceNode, VoteOutcome, Winner,
};
pub use rational::{Rational, SupportThreshold};
pub use synthesis::{
    approximation_rate, classify, itemset_approximation_rate, synthesize, MissingSupportPolicy,
    PatternLabel, SynthesisConfig, SynthesisReport, SynthesizedPattern,
};
pub use tiering::{
    golden_ratio_check, load_access_log, tier_init, tier_run, tier_update, AccessLog,
    TierAssignment, TierConfig,
};
