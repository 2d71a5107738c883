//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use segmine_core::anytime::{anytime_round_traced, anytime_run, AnytimeConfig, EnsembleState};
use segmine_core::dataset::{Segment, Transaction};
use segmine_core::miner::{mine_centralized, mine_partition, mine_segment, ItemSet};
use segmine_core::multisource::{fuse_node_traced, FuseConfig, ScoredContest, SourceNode};
use segmine_core::rational::{Rational, SupportThreshold};
use segmine_core::synthesis::{classify, synthesize, PatternLabel, SynthesisConfig};
use segmine_core::tiering::{golden_ratio_check, tier_run, AccessLog, TierConfig};
use segmine_core::{partition_count, structural_vote, Winner};
use segmine_testkit::{
    anytime_fixture_dataset, brute_force_mine, planted_taxonomy_fixture, random_dataset,
    ExactCounter,
};

fn check(number: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(msg) => {
            println!("criterion {number} ({name}): FAIL - {msg}");
            panic!("criterion {number} ({name}) failed: {msg}");
        }
    }
}

fn corpus_thresholds() -> Vec<SupportThreshold> {
    vec![
        SupportThreshold::new(1, 5).unwrap(),
        SupportThreshold::new(1, 2).unwrap(),
        SupportThreshold::new(4, 5).unwrap(),
    ]
}

const CORPUS_SEEDS: u64 = 100;
const CORPUS_MAX_TRANSACTIONS: usize = 1000;
const CORPUS_MAX_ITEMS: u32 = 12;

#[test]
fn criterion_1_oracle_equivalence() {
    check(1, "oracle equivalence", || {
        let started = Instant::now();
        for seed in 0..CORPUS_SEEDS {
            let ds = random_dataset(seed, CORPUS_MAX_TRANSACTIONS, CORPUS_MAX_ITEMS);
            for t in corpus_thresholds() {
                let expected = brute_force_mine(ds.transactions(), t);
                let seg = Segment::new(0, 0, ds.transactions().to_vec());
                let mined =
                    mine_segment(&seg, t).map_err(|e| format!("seed {seed}: miner failed: {e}"))?;
                if mined.len() != expected.len() {
                    return Err(format!(
                        "seed {seed} at {t}: {} mined vs {} enumerated",
                        mined.len(),
                        expected.len()
                    ));
                }
                for (items, count) in &expected {
                    if mined.count_of(items) != Some(*count) {
                        return Err(format!("seed {seed} at {t}: count mismatch for {items:?}"));
                    }
                }
            }
        }
        let elapsed = started.elapsed();
        if elapsed.as_secs() >= 60 {
            return Err(format!("corpus took {elapsed:?}, budget is 60 s"));
        }
        Ok(())
    });
}

#[test]
fn criterion_2_synthesis_exactness() {
    check(2, "synthesis exactness on full coverage", || {
        for seed in 0..CORPUS_SEEDS {
            let ds = random_dataset(seed, CORPUS_MAX_TRANSACTIONS, CORPUS_MAX_ITEMS);
            let k = (seed as usize % 8) + 1;
            let partition = partition_count(&ds, k).map_err(|e| e.to_string())?;
            for t in corpus_thresholds() {
                let locals = mine_partition(&partition, t).map_err(|e| e.to_string())?;
                let cfg = SynthesisConfig::new(t);
                let report = synthesize(&locals, &cfg).map_err(|e| e.to_string())?;
                let oracle = mine_centralized(&ds, t).map_err(|e| e.to_string())?;
                for p in &report.patterns {
                    if p.coverage != report.segment_count {
                        continue;
                    }
                    let truth =
                        segmine_core::miner::support_of(&oracle, &p.items).ok_or_else(|| {
                            format!(
                                "seed {seed}: fully covered {:?} missing from oracle",
                                p.items
                            )
                        })?;
                    if p.support_estimate != truth
                        || p.support_lower != truth
                        || p.support_upper != truth
                    {
                        return Err(format!(
                            "seed {seed} k {k} at {t}: {:?} estimate {} != centralized {}",
                            p.items, p.support_estimate, truth
                        ));
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_3_bound_soundness() {
    check(3, "bound soundness", || {
        let mut checked = 0u64;
        for seed in 0..CORPUS_SEEDS {
            let ds = random_dataset(seed, CORPUS_MAX_TRANSACTIONS, CORPUS_MAX_ITEMS);
            let counter = ExactCounter::new(ds.transactions());
            let n = ds.len() as u64;
            let k = (seed as usize % 8) + 1;
            let partition = partition_count(&ds, k).map_err(|e| e.to_string())?;
            for t in corpus_thresholds() {
                let locals = mine_partition(&partition, t).map_err(|e| e.to_string())?;
                let cfg = SynthesisConfig::new(t);
                let report = synthesize(&locals, &cfg).map_err(|e| e.to_string())?;
                for p in &report.patterns {
                    let truth = Rational::ratio(counter.count(&p.items), n);
                    if !(p.support_lower <= truth && truth <= p.support_upper) {
                        return Err(format!(
                            "seed {seed} k {k} at {t}: {:?} true {} outside [{}, {}]",
                            p.items, truth, p.support_lower, p.support_upper
                        ));
                    }
                    checked += 1;
                }
            }
        }
        if checked == 0 {
            return Err("no patterns were checked".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_4_tennis_example() {
    check(4, "tennis example", || {
        let contest =
            ScoredContest::new(vec![(6, 4), (0, 6), (6, 4)]).map_err(|e| e.to_string())?;
        let outcome = structural_vote(&contest);
        if outcome.winner != Winner::A {
            return Err(format!(
                "structural winner {:?}, expected A",
                outcome.winner
            ));
        }
        if outcome.per_source_wins != (2, 1) {
            return Err(format!(
                "per-source wins {:?}, expected (2, 1)",
                outcome.per_source_wins
            ));
        }
        if outcome.pooled != (12, 14) {
            return Err(format!("pooled {:?}, expected (12, 14)", outcome.pooled));
        }
        if outcome.pooled_winner != Winner::B {
            return Err(format!(
                "pooled winner {:?}, expected B",
                outcome.pooled_winner
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_5_taxonomy_recovery() {
    check(5, "planted taxonomy recovery", || {
        for seed in 0..20 {
            let fixture = planted_taxonomy_fixture(seed);
            let locals: Vec<_> = fixture
                .segments
                .iter()
                .map(|s| mine_segment(s, fixture.config.minsupport))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let report = classify(
                synthesize(&locals, &fixture.config).map_err(|e| e.to_string())?,
                &fixture.config,
            );
            for (items, expected) in [
                (&fixture.global_itemset, PatternLabel::Global),
                (&fixture.exceptional_itemset, PatternLabel::Exceptional),
                (&fixture.trend_itemset, PatternLabel::Trend),
            ] {
                let got = report
                    .pattern(items)
                    .ok_or_else(|| format!("seed {seed}: {items:?} not in report"))?
                    .label;
                if got != expected {
                    return Err(format!(
                        "seed {seed}: {items:?} labeled {got:?}, expected {expected:?}"
                    ));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_6_anytime_identities() {
    check(6, "anytime identities", || {
        let ds = anytime_fixture_dataset();
        let t = SupportThreshold::new(2, 5).unwrap();

        // Exhaustive sample: rate 1.0 every round.
        let cfg = AnytimeConfig::new(ds.len(), 5, 3, t);
        for r in anytime_run(&ds, &cfg).map_err(|e| e.to_string())? {
            if r.rate != Rational::one() {
                return Err(format!("round {}: exhaustive rate {}", r.round, r.rate));
            }
        }

        // Incremental state equals a from-scratch recomputation every round,
        // with samples re-mined by the enumeration oracle.
        let cfg = AnytimeConfig::new(90, 8, 42, t);
        let mut scratch: BTreeMap<ItemSet, (u32, Rational)> = BTreeMap::new();
        let mut state = EnsembleState::new();
        for round in 1..=cfg.rounds {
            let (next, ids) = anytime_round_traced(&ds, state, &cfg).map_err(|e| e.to_string())?;
            state = next;
            let sample: Vec<Transaction> =
                ids.iter().map(|&i| ds.transactions()[i].clone()).collect();
            for (items, count) in brute_force_mine(&sample, t) {
                let entry = scratch
                    .entry(items)
                    .or_insert_with(|| (0, Rational::zero()));
                entry.0 += 1;
                entry.1 = &entry.1 + &Rational::ratio(count, sample.len() as u64);
            }
            let expected: Vec<(ItemSet, Rational)> = scratch
                .iter()
                .filter(|(_, (times, _))| {
                    Rational::ratio(*times as u64, round as u64) >= cfg.admit_vote_fraction
                })
                .map(|(items, (times, sum))| {
                    (items.clone(), sum / &Rational::from_int(*times as u64))
                })
                .collect();
            if state.admitted(&cfg.admit_vote_fraction) != expected {
                return Err(format!("round {round}: incremental != scratch"));
            }
        }

        // Aggregate convergence over 20 seeds: mean rate over the last
        // quarter of rounds >= mean over the first quarter.
        let rounds = 12u32;
        let quarter = rounds as usize / 4;
        let mut first = Rational::zero();
        let mut last = Rational::zero();
        for seed in 0..20 {
            let cfg = AnytimeConfig::new(25, rounds, seed, t);
            let reports = anytime_run(&ds, &cfg).map_err(|e| e.to_string())?;
            for r in &reports[..quarter] {
                first = first + &r.rate;
            }
            for r in &reports[reports.len() - quarter..] {
                last = last + &r.rate;
            }
        }
        if last < first {
            return Err(format!(
                "late mean {} < early mean {}",
                last.to_f64() / 60.0,
                first.to_f64() / 60.0
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_7_tiering_law() {
    check(7, "tiering law", || {
        use rand::{Rng, SeedableRng};

        // Defaults on N = 100: exactly 5/30/65 at every epoch.
        let universe: std::collections::BTreeSet<u64> = (0..100).collect();
        let cfg = TierConfig::new(1000, 17);
        let logs: Vec<AccessLog> = (0..3)
            .map(|w| {
                let events: Vec<(u64, u64)> = (0..200)
                    .map(|i| ((i * 7) % 100, w * 1000 + 1 + i * 4))
                    .collect();
                AccessLog::from_events(events).unwrap()
            })
            .collect();
        let assignments = tier_run(&universe, &logs, &cfg).map_err(|e| e.to_string())?;
        for a in &assignments {
            if a.hot.len() != 5 || a.warm.len() != 30 || a.cold.len() != 65 {
                return Err(format!(
                    "epoch {}: sizes {}/{}/{}",
                    a.epoch,
                    a.hot.len(),
                    a.warm.len(),
                    a.cold.len()
                ));
            }
        }

        // Frequency ordering on 50 seeded random workloads.
        for seed in 0..50u64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut events: Vec<(u64, u64)> = (0..600)
                .map(|_| {
                    let r: u64 = rng.gen_range(0..100);
                    let skewed = (r * r) / 100; // heavier traffic on low ids
                    (skewed, rng.gen_range(1..=1000))
                })
                .collect();
            events.sort_by_key(|&(_, ts)| ts);
            let mut counts: BTreeMap<u64, u64> = (0..100).map(|id| (id, 0)).collect();
            for &(id, _) in &events {
                *counts.get_mut(&id).unwrap() += 1;
            }
            let log = AccessLog::from_events(events).unwrap();
            let mut wcfg = TierConfig::new(1000, seed);
            wcfg.seed = seed;
            let run = tier_run(&universe, &[log], &wcfg).map_err(|e| e.to_string())?;
            let a = &run[1];
            let min_hot = a.hot.iter().map(|id| counts[id]).min().unwrap();
            let max_warm = a.warm.iter().map(|id| counts[id]).max().unwrap();
            let min_warm = a.warm.iter().map(|id| counts[id]).min().unwrap();
            let max_cold = a.cold.iter().map(|id| counts[id]).max().unwrap();
            if max_warm > min_hot || max_cold > min_warm {
                return Err(format!(
                    "seed {seed}: ordering violated (hot>={min_hot}, warm in [{min_warm},{max_warm}], cold<={max_cold})"
                ));
            }
        }

        // Golden ratio at the defaults: exactly 7/13, within 1e-3 of 0.539.
        let ratio = golden_ratio_check(&cfg);
        if ratio != Rational::new(7, 13) {
            return Err(format!("golden ratio check {ratio}, expected 7/13"));
        }
        let diff = (&ratio - &Rational::new(539, 1000)).abs();
        if diff >= Rational::new(1, 1000) {
            return Err(format!("|7/13 - 0.539| = {diff} >= 1e-3"));
        }
        Ok(())
    });
}

#[test]
fn criterion_8_privacy_contract() {
    check(8, "privacy contract", || {
        let leaves: Vec<_> = (0..3).map(|i| random_dataset(400 + i, 300, 10)).collect();
        let tree = SourceNode::interior(
            "root",
            leaves
                .iter()
                .enumerate()
                .map(|(i, ds)| SourceNode::leaf(format!("leaf-{i}"), ds.clone()))
                .collect(),
        );
        let cfg = FuseConfig::new(SynthesisConfig::new(SupportThreshold::new(1, 2).unwrap()));
        let (_, trace) = fuse_node_traced(&tree, &cfg).map_err(|e| e.to_string())?;
        for (i, ds) in leaves.iter().enumerate() {
            let read = trace.transactions_read[&format!("leaf-{i}")];
            if read != ds.len() as u64 {
                return Err(format!(
                    "leaf-{i} read {read} transactions, dataset has {}",
                    ds.len()
                ));
            }
        }
        if trace.transactions_read["root"] != 0 {
            return Err(format!(
                "interior node read {} transactions",
                trace.transactions_read["root"]
            ));
        }
        Ok(())
    });
}

// --- criterion 9: CLI determinism -------------------------------------------

struct WorkflowRun {
    stdout: Vec<u8>,
    files: BTreeMap<String, Vec<u8>>,
}

fn run_workflow(
    threads: &str,
    args: &[&str],
    setup: &dyn Fn(&Path),
) -> Result<WorkflowRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    setup(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_segmine"))
        .args(args)
        .current_dir(dir.path())
        .env("SEGMINE_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "workflow {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let mut files = BTreeMap::new();
    collect_outputs(dir.path(), dir.path(), &mut files)?;
    Ok(WorkflowRun {
        stdout: out.stdout,
        files,
    })
}

fn collect_outputs(
    root: &Path,
    dir: &Path,
    files: &mut BTreeMap<String, Vec<u8>>,
) -> Result<(), String> {
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let path = entry.path();
        if path.is_dir() {
            collect_outputs(root, &path, files)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            let rel = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            files.insert(rel, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(())
}

fn write_workflow_inputs(dir: &Path) {
    let mut data = String::new();
    for i in 0..60u32 {
        let mut row = vec![i % 5, 5 + (i % 3)];
        if i % 2 == 0 {
            row.push(10);
        }
        if i % 7 == 0 {
            row.push(11 + (i % 4));
        }
        data.push_str(&row.iter().map(u32::to_string).collect::<Vec<_>>().join(" "));
        data.push('\n');
    }
    fs::write(dir.join("data.txt"), data).unwrap();
    fs::write(
        dir.join("tree.json"),
        r#"{"node_id": "root", "children": [
            {"node_id": "a", "dataset_path": "data.txt"},
            {"node_id": "b", "dataset_path": "data.txt"}
        ]}"#,
    )
    .unwrap();
    let mut w1 = String::from("record_id,timestamp\n");
    let mut w2 = String::new();
    for i in 0..150u64 {
        w1.push_str(&format!("{},{}\n", (i * 13) % 100, 1 + (i * 3) % 999));
        w2.push_str(&format!("{},{}\n", (i * 29) % 100, 1001 + (i * 7) % 999));
    }
    let sort_csv = |text: &str, header: bool| {
        let mut lines: Vec<(u64, u64)> = text
            .lines()
            .skip(usize::from(header))
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (b.parse().unwrap(), a.parse().unwrap())
            })
            .collect();
        lines.sort();
        let mut out = if header {
            String::from("record_id,timestamp\n")
        } else {
            String::new()
        };
        for (ts, id) in lines {
            out.push_str(&format!("{id},{ts}\n"));
        }
        out
    };
    fs::write(dir.join("w1.csv"), sort_csv(&w1, true)).unwrap();
    fs::write(dir.join("w2.csv"), sort_csv(&w2, false)).unwrap();
}

#[test]
fn criterion_9_cli_determinism() {
    check(9, "CLI determinism", || {
        let workflows: Vec<Vec<&str>> = vec![
            vec![
                "mine",
                "data.txt",
                "--minsupport",
                "0.25",
                "--segments",
                "4",
                "--oracle",
                "--out",
                "report.json",
            ],
            vec![
                "anytime",
                "data.txt",
                "--minsupport",
                "0.25",
                "--sample-size",
                "20",
                "--rounds",
                "6",
                "--seed",
                "11",
                "--out",
                "transcript.json",
            ],
            vec![
                "fuse",
                "tree.json",
                "--minsupport",
                "0.25",
                "--segment-bound",
                "16",
                "--out-dir",
                "reports",
            ],
            vec![
                "tier",
                "w1.csv",
                "w2.csv",
                "--records",
                "100",
                "--window",
                "1000",
                "--seed",
                "5",
                "--out-dir",
                "tiers",
            ],
            vec!["vote", "6:4", "0:6", "6:4"],
        ];
        for args in &workflows {
            let baseline = run_workflow("1", args, &write_workflow_inputs)?;
            for threads in ["1", "4"] {
                let again = run_workflow(threads, args, &write_workflow_inputs)?;
                if again.stdout != baseline.stdout {
                    return Err(format!("{:?}: stdout differs at {threads} threads", args));
                }
                if again.files != baseline.files {
                    return Err(format!(
                        "{:?}: output files differ at {threads} threads",
                        args
                    ));
                }
            }
        }
        Ok(())
    });
}
