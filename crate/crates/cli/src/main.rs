//! `segmine` — batch workflows over the partitioned mining library.
//!
//! Every command is deterministic given its flags (seeds included): reports
//! go to stdout or the named output path as stable JSON, diagnostics to
//! stderr. Exit codes: 0 success, 1 runtime failure, 2 argument errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use segmine_core::anytime::{anytime_run, AnytimeConfig};
use segmine_core::multisource::{cluster_sources, fuse_node_traced, FuseConfig, ScoredContest};
use segmine_core::rational::{Rational, SupportThreshold};
use segmine_core::synthesis::{
    approximation_rate, classify, synthesize, MissingSupportPolicy, SynthesisConfig,
    SynthesisReport,
};
use segmine_core::tiering::{load_access_log, tier_run, AccessLog, TierConfig};
use segmine_core::{
    load_dataset, load_source_tree, mine_centralized, mine_partition, partition_count,
    partition_sequential, structural_vote, Partition,
};

#[derive(Parser)]
#[command(
    name = "segmine",
    version,
    about = "Partitioned pattern mining workflows"
)]
struct Cli {
    /// Worker threads for segment mining (default: SEGMINE_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a dataset, mine segments, synthesize and classify patterns.
    Mine(MineArgs),
    /// Sampling-based anytime mining with per-round approximation rates.
    Anytime(AnytimeArgs),
    /// Fuse patterns up a tree of data sources, or cluster the sources.
    Fuse(FuseArgs),
    /// Structural vs pooled aggregation of per-source scores, e.g. 6:4 0:6 6:4.
    Vote(VoteArgs),
    /// Hot/warm/cold tiering of records from per-window access logs.
    Tier(TierArgs),
}

#[derive(Args)]
struct SynthesisFlags {
    /// Minimum support in (0, 1], e.g. 0.5 or 1/2.
    #[arg(long)]
    minsupport: SupportThreshold,

    /// Minimum fraction of segments a Global pattern must cover.
    #[arg(long = "theta-global")]
    theta_global: Option<Rational>,

    /// Maximum fraction of segments an Exceptional pattern may cover.
    #[arg(long = "theta-exceptional")]
    theta_exceptional: Option<Rational>,

    /// Multiple of minsupport an Exceptional pattern must reach somewhere.
    #[arg(long)]
    mu: Option<Rational>,

    /// Minimum |least-squares slope| for a Trend pattern.
    #[arg(long = "trend-slope")]
    trend_slope: Option<Rational>,

    /// Minimum |Spearman rank correlation| for a Trend pattern.
    #[arg(long = "trend-corr")]
    trend_corr: Option<Rational>,

    /// Point estimate for unreported supports: lower, upper, or midpoint.
    #[arg(long = "missing-policy", value_parser = parse_policy)]
    missing_policy: Option<MissingSupportPolicy>,
}

impl SynthesisFlags {
    fn to_config(&self) -> Result<SynthesisConfig, Failure> {
        let mut cfg = SynthesisConfig::new(self.minsupport);
        if let Some(v) = &self.theta_global {
            cfg.global_coverage_fraction = v.clone();
        }
        if let Some(v) = &self.theta_exceptional {
            cfg.exceptional_coverage_fraction = v.clone();
        }
        if let Some(v) = &self.mu {
            cfg.exceptional_support_multiplier = v.clone();
        }
        if let Some(v) = &self.trend_slope {
            cfg.trend_min_slope = v.clone();
        }
        if let Some(v) = &self.trend_corr {
            cfg.trend_min_rank_corr = v.clone();
        }
        if let Some(v) = self.missing_policy {
            cfg.missing_support_policy = v;
        }
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse_policy(s: &str) -> Result<MissingSupportPolicy, String> {
    match s.to_ascii_lowercase().as_str() {
        "lower" | "lowerbound" => Ok(MissingSupportPolicy::LowerBound),
        "upper" | "upperbound" => Ok(MissingSupportPolicy::UpperBound),
        "midpoint" => Ok(MissingSupportPolicy::Midpoint),
        other => Err(format!(
            "unknown policy '{other}' (expected lower, upper, or midpoint)"
        )),
    }
}

#[derive(Args)]
struct MineArgs {
    /// Transaction file: one line per transaction, integer item ids.
    data: PathBuf,

    #[command(flatten)]
    synthesis: SynthesisFlags,

    /// Partition into this many balanced segments.
    #[arg(long, conflicts_with = "segment_size")]
    segments: Option<usize>,

    /// Partition into consecutive segments of at most this many transactions.
    #[arg(long = "segment-size")]
    segment_size: Option<usize>,

    /// Also mine the whole dataset and report the approximation rate.
    #[arg(long)]
    oracle: bool,

    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnytimeArgs {
    data: PathBuf,

    /// Minimum support in (0, 1].
    #[arg(long)]
    minsupport: SupportThreshold,

    /// Transactions drawn per round, without replacement.
    #[arg(long = "sample-size")]
    sample_size: usize,

    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    rounds: u32,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fraction of samples an itemset must be frequent in to be admitted.
    #[arg(long, default_value = "1/2")]
    vote: Rational,

    /// Transcript path, one JSON line per round (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Tree description: JSON {node_id, dataset_path?, children:[...]}.
    tree: PathBuf,

    #[command(flatten)]
    synthesis: SynthesisFlags,

    /// Partition node datasets into segments of at most this many rows.
    #[arg(long = "segment-bound")]
    segment_bound: Option<usize>,

    /// Directory for per-node reports, one <node_id>.json each.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,

    /// Cluster the leaf sources instead of printing the root report.
    #[arg(long)]
    cluster: bool,

    /// Jaccard similarity threshold for --cluster.
    #[arg(long, default_value = "1/2")]
    threshold: Rational,
}

#[derive(Args)]
struct VoteArgs {
    /// Per-source scores as A:B pairs, e.g. 6:4 0:6 6:4.
    #[arg(required = true)]
    scores: Vec<String>,
}

#[derive(Args)]
struct TierArgs {
    /// Access logs, one CSV (record_id,timestamp) per window, in order.
    logs: Vec<PathBuf>,

    /// Number of records; the universe is ids 0..N-1.
    #[arg(long)]
    records: u64,

    /// Hot tier fraction.
    #[arg(long, default_value = "0.05")]
    hot: Rational,

    /// Warm tier fraction.
    #[arg(long, default_value = "0.30")]
    warm: Rational,

    /// Window length in timestamp units.
    #[arg(long)]
    window: u64,

    /// Seed for the epoch-0 random assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory for per-epoch assignment files (stdout lines when omitted).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<segmine_core::Error> for Failure {
    fn from(e: segmine_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("SEGMINE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: thread count must be >= 1");
            return ExitCode::from(2);
        }
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let result = match cli.command {
        Command::Mine(args) => cmd_mine(args),
        Command::Anytime(args) => cmd_anytime(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Vote(args) => cmd_vote(args),
        Command::Tier(args) => cmd_tier(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// The mine report: the synthesis report plus, with --oracle, the fraction of
/// centralized frequent itemsets recovered as Globals.
#[derive(Serialize, Deserialize)]
struct MineReport {
    #[serde(flatten)]
    report: SynthesisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    approximation_rate: Option<Rational>,
}

fn cmd_mine(args: MineArgs) -> Result<(), Failure> {
    let cfg = args.synthesis.to_config()?;
    let ds = load_dataset(&args.data)?;
    if ds.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "dataset '{}' has no transactions",
            args.data.display()
        )));
    }
    let partition: Partition = match (args.segments, args.segment_size) {
        (Some(k), None) => {
            if k < 1 {
                return Err(Failure::Usage("--segments must be >= 1".into()));
            }
            partition_count(&ds, k)?
        }
        (None, Some(m)) => {
            if m < 1 {
                return Err(Failure::Usage("--segment-size must be >= 1".into()));
            }
            partition_sequential(&ds, m)?
        }
        (None, None) => partition_count(&ds, 1)?,
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let locals = mine_partition(&partition, cfg.minsupport)?;
    let report = classify(synthesize(&locals, &cfg)?, &cfg);
    let rate = if args.oracle {
        let oracle = mine_centralized(&ds, cfg.minsupport)?;
        Some(approximation_rate(&report, &oracle))
    } else {
        None
    };
    let out = MineReport {
        report,
        approximation_rate: rate,
    };
    write_json_pretty(args.out.as_deref(), &out)
}

fn cmd_anytime(args: AnytimeArgs) -> Result<(), Failure> {
    let ds = load_dataset(&args.data)?;
    let mut cfg = AnytimeConfig::new(args.sample_size, args.rounds, args.seed, args.minsupport);
    cfg.admit_vote_fraction = args.vote.clone();
    if cfg.admit_vote_fraction <= Rational::zero() || cfg.admit_vote_fraction > Rational::one() {
        return Err(Failure::Usage("--vote must be in (0, 1]".into()));
    }
    let reports = anytime_run(&ds, &cfg)?;
    let mut lines = String::new();
    for r in &reports {
        lines.push_str(&serde_json::to_string(r).map_err(anyhow::Error::from)?);
        lines.push('\n');
    }
    write_text(args.out.as_deref(), &lines)
}

fn cmd_fuse(args: FuseArgs) -> Result<(), Failure> {
    let synthesis = args.synthesis.to_config()?;
    if args.segment_bound == Some(0) {
        return Err(Failure::Usage("--segment-bound must be >= 1".into()));
    }
    let tree = load_source_tree(&args.tree)?;

    if args.cluster {
        let leaves = collect_leaves(&tree);
        let clustering = cluster_sources(&leaves, synthesis.minsupport, args.threshold.clone())?;
        return write_json_pretty(None, &clustering);
    }

    let mut cfg = FuseConfig::new(synthesis);
    cfg.max_segment_size = args.segment_bound;
    let (root_report, trace) = fuse_node_traced(&tree, &cfg)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::Runtime)?;
        for (node_id, report) in &trace.reports {
            let path = dir.join(format!("{}.json", sanitize_file_stem(node_id)));
            write_json_pretty(Some(&path), report)?;
        }
    }
    write_json_pretty(None, &root_report)
}

fn collect_leaves(node: &segmine_core::SourceNode) -> Vec<segmine_core::SourceNode> {
    fn walk(node: &segmine_core::SourceNode, out: &mut Vec<segmine_core::SourceNode>) {
        if node.is_leaf() {
            out.push(node.clone());
        }
        for child in &node.children {
            walk(child, out);
        }
    }
    let mut leaves = Vec::new();
    walk(node, &mut leaves);
    leaves
}

fn cmd_vote(args: VoteArgs) -> Result<(), Failure> {
    let mut pairs = Vec::with_capacity(args.scores.len());
    for s in &args.scores {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Failure::Usage(format!("expected A:B score, got '{s}'")))?;
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid score '{s}'")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid score '{s}'")))?;
        pairs.push((a, b));
    }
    let contest = ScoredContest::new(pairs).map_err(|e| Failure::Usage(e.to_string()))?;
    let outcome = structural_vote(&contest);
    println!(
        "per-source wins: A={} B={}",
        outcome.per_source_wins.0, outcome.per_source_wins.1
    );
    println!("structural winner: {}", outcome.winner);
    println!("pooled score: {}:{}", outcome.pooled.0, outcome.pooled.1);
    println!("pooled winner: {}", outcome.pooled_winner);
    Ok(())
}

fn cmd_tier(args: TierArgs) -> Result<(), Failure> {
    if args.records < 1 {
        return Err(Failure::Usage("--records must be >= 1".into()));
    }
    let mut cfg = TierConfig::new(args.window, args.seed);
    cfg.hot_fraction = args.hot.clone();
    cfg.warm_fraction = args.warm.clone();
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let logs: Vec<AccessLog> = args
        .logs
        .iter()
        .map(load_access_log)
        .collect::<segmine_core::Result<_>>()?;
    let universe: BTreeSet<u64> = (0..args.records).collect();
    let assignments = tier_run(&universe, &logs, &cfg)?;

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::Runtime)?;
        for a in &assignments {
            let path = dir.join(format!("epoch_{:03}.json", a.epoch));
            write_json_pretty(Some(&path), a)?;
        }
        Ok(())
    } else {
        let mut lines = String::new();
        for a in &assignments {
            lines.push_str(&serde_json::to_string(a).map_err(anyhow::Error::from)?);
            lines.push('\n');
        }
        write_text(None, &lines)
    }
}

fn sanitize_file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_json_pretty<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Runtime),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Runtime(e.into()))?;
            Ok(())
        }
    }
}
