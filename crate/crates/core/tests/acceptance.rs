//! End-to-end acceptance checks. Each criterion runs in isolation and prints
//! one PASS/FAIL line; the process fails if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use astarmine::inverted::MergeCase;
use astarmine::miner::gain::{closed_form_term, merge_term};
use astarmine::miner::{data_gain, net_gain, write_patterns_jsonl, MIN_GAIN};
use astarmine::rules::label_pairs;
use astarmine::scoring::SENTINEL;
use astarmine::synth::{planted_stars, random_graph, rule_fixture, PlantConfig, RandomGraphConfig, RuleFixtureConfig};
use astarmine::{
    conditional_entropy, data_length, score_node, split_to_pairs, total_length, Algorithm, AttributedGraph, GainMode,
    InvertedDatabase, Miner, MinerConfig, MiningResult,
};

use common::*;

const CORPUS: usize = 500;

fn line(core: &[&str], leaves: &[&str], positions: &[&str]) -> ((Vec<String>, Vec<String>), BTreeSet<String>) {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    ((s(core), s(leaves)), positions.iter().map(|x| x.to_string()).collect())
}

fn config(algorithm: Algorithm) -> MinerConfig {
    MinerConfig { algorithm, gain: GainMode::Net }
}

fn run(g: &AttributedGraph, algorithm: Algorithm) -> MiningResult {
    Miner::new(g, None, config(algorithm)).unwrap().run().unwrap()
}

fn pattern_bytes(result: &MiningResult, g: &AttributedGraph) -> Vec<u8> {
    let mut out = Vec::new();
    write_patterns_jsonl(&result.patterns, g, &mut out).unwrap();
    out
}

fn running_example_database() {
    let start = Instant::now();
    let g = running_example();
    let (_, db, _) = model_of(&g);
    let lines = db_lines(&db, &g);
    let expected: Lines = [
        line(&["a"], &["a"], &["v1", "v2"]),
        line(&["a"], &["b"], &["v1", "v5"]),
        line(&["a"], &["c"], &["v1", "v5"]),
        line(&["b"], &["a"], &["v4"]),
        line(&["b"], &["b"], &["v4", "v5"]),
        line(&["b"], &["c"], &["v5"]),
        line(&["c"], &["a"], &["v2", "v3"]),
        line(&["c"], &["b"], &["v3"]),
    ]
    .into_iter()
    .collect();
    assert_eq!(lines.get(&(vec!["c".into()], vec!["a".into()])), Some(&expected[&(vec!["c".into()], vec!["a".into()])]));
    assert_eq!(lines, expected);
    assert_eq!(lines, enumerate_initial_lines(&g));
    assert!(start.elapsed() < Duration::from_secs(1));
}

fn running_example_merge() {
    let g = running_example();
    let mut miner = Miner::new(&g, None, config(Algorithm::Partial)).unwrap();
    let step = miner.step().unwrap().expect("a merge");
    let db = miner.db();
    let names = |l| db.leafset(l).values().iter().map(|a| g.attr_label(*a)).collect::<Vec<_>>().join(",");
    assert_eq!((names(step.x), names(step.y)), ("b".to_owned(), "c".to_owned()));
    let lines = db_lines(db, &g);
    for (key, pos) in [
        line(&["a"], &["b", "c"], &["v1", "v5"]),
        line(&["b"], &["b"], &["v4"]),
        line(&["b"], &["b", "c"], &["v5"]),
    ] {
        assert_eq!(lines.get(&key), Some(&pos), "{key:?}");
    }
    // two lines fuse at {a}; at {b} one line dies and one is born
    assert_eq!(lines.len(), 7);
    assert!(!lines.contains_key(&(vec!["a".into()], vec!["b".into()])));
    assert!(!lines.contains_key(&(vec!["b".into()], vec!["c".into()])));
}

/// Every candidate pair of every Basic iteration on the corpus, with gains
/// checked against from-scratch lengths.
fn gain_oracle_equivalence() {
    let start = Instant::now();
    let mut checked = 0usize;
    for (seed, g) in corpus(CORPUS) {
        let mut miner = Miner::new(&g, None, config(Algorithm::Basic)).unwrap();
        loop {
            let db = miner.db();
            let live = db.live_leafsets();
            let before_data = data_bits(db);
            let before_total = total_bits(&g, db);
            for (i, &x) in live.iter().enumerate() {
                for &y in &live[i + 1..] {
                    let mut merged = db.clone();
                    merged.apply_merge(x, y);
                    let want = before_data - data_bits(&merged);
                    assert_close(data_gain(db, x, y), want, 1e-9, &format!("seed {seed} data gain"));
                    let want = before_total - total_bits(&g, &merged);
                    assert_close(net_gain(db, miner.model(), x, y), want, 1e-9, &format!("seed {seed} net gain"));
                    checked += 1;
                }
            }
            if miner.step().unwrap().is_none() {
                break;
            }
        }
    }
    assert!(checked > 1000, "only {checked} candidates");
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());
}

fn monotone_and_telescoping() {
    for (seed, g) in corpus(CORPUS) {
        let mut miner = Miner::new(&g, None, config(Algorithm::Partial)).unwrap();
        let initial = total_bits(&g, miner.db());
        assert_close(total_length(miner.model(), miner.db()), initial, 1e-9, "initial length");
        let mut prev = initial;
        let mut gains = 0.0;
        while miner.step().unwrap().is_some() {
            let row = miner.stats().iterations.last().unwrap();
            let now = total_bits(&g, miner.db());
            assert!(row.net_gain_bits > MIN_GAIN);
            assert!(now < prev, "seed {seed}: length did not shrink");
            assert_close(prev - now, row.net_gain_bits, 1e-9, &format!("seed {seed} step gain"));
            assert_close(total_length(miner.model(), miner.db()), now, 1e-9, "tracked length");
            gains += row.net_gain_bits;
            prev = now;
        }
        assert_close(prev, initial - gains, 1e-9, &format!("seed {seed} telescoping"));
    }
}

fn lossless_cover() {
    let mut violations = 0usize;
    for (_, g) in corpus(CORPUS) {
        let facts = enumerate_facts(&g);
        let mut miner = Miner::new(&g, None, config(Algorithm::Partial)).unwrap();
        while miner.step().unwrap().is_some() {
            let counts = db_fact_counts(miner.db(), &g);
            let covered: BTreeSet<_> = counts.keys().cloned().collect();
            violations += counts.values().filter(|n| **n != 1).count();
            violations += facts.symmetric_difference(&covered).count();
            if miner.db().check_consistency().is_err() {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

fn basic_partial_equivalence() {
    for (seed, g) in corpus(CORPUS) {
        let basic = run(&g, Algorithm::Basic);
        let partial = run(&g, Algorithm::Partial);
        let seq = |r: &MiningResult| {
            r.stats
                .iterations
                .iter()
                .map(|it| (it.accepted.clone(), it.net_gain_bits.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(&basic), seq(&partial), "seed {seed}: merge sequence");
        assert_eq!(pattern_bytes(&basic, &g), pattern_bytes(&partial, &g), "seed {seed}: pattern file");
    }
}

fn entropy_identities() {
    let check = |db: &InvertedDatabase| {
        let matrix = frequency_matrix(db);
        let s = db.total_frequency();
        let bits = data_length(db);
        assert_close(bits, entropy_bits(&matrix), 1e-9, "vs entropy oracle");
        assert_close(bits, usage_weighted_code_bits(&matrix), 1e-9, "vs usage-weighted codes");
        if s > 0 {
            assert_close(bits, s as f64 * conditional_entropy(db).unwrap(), 1e-9, "s·H");
        }
        if matrix.iter().all(|c| c.len() <= 1) {
            assert_eq!(bits, 0.0);
        }
    };
    for (_, g) in corpus(CORPUS) {
        let mut miner = Miner::new(&g, None, config(Algorithm::Partial)).unwrap();
        check(miner.db());
        while miner.step().unwrap().is_some() {
            check(miner.db());
        }
    }
    // one line per coreset
    for (edges, attrs) in [("u\tv\n", "u\tx\nv\ty\n"), ("u\tv\nv\tw\n", "u\tx\nv\ty\nw\tx\n")] {
        let g = astarmine::load_graph(edges.as_bytes(), attrs.as_bytes()).unwrap().0;
        let (_, db, _) = model_of(&g);
        assert!(frequency_matrix(&db).iter().all(|c| c.len() == 1));
        assert_eq!(data_length(&db), 0.0);
    }
}

fn unified_merge_formula() {
    let xlx = |n: u64| if n == 0 { 0.0 } else { n as f64 * (n as f64).log2() };
    let mut cases = BTreeMap::new();
    for x in 1..=10u64 {
        for y in 1..=10u64 {
            for xy in 1..=x.min(y) {
                let case = MergeCase::classify(x, y, xy);
                let unified = merge_term(x, y, xy);
                let specialised = closed_form_term(case, x, y, xy);
                assert!((unified - specialised).abs() <= 1e-12, "{x} {y} {xy}: {unified} vs {specialised}");
                let direct = xlx(x) + xlx(y) - (xlx(x - xy) + xlx(y - xy) + xlx(xy));
                assert!((unified - direct).abs() <= 1e-12);
                *cases.entry(format!("{case:?}")).or_insert(0) += 1;
            }
        }
    }
    assert_eq!(cases.len(), 4, "{cases:?}");
}

fn partial_update_economy() {
    let (mut basic_evals, mut partial_evals, mut iterations) = (0u64, 0u64, 0u64);
    for seed in 0..20 {
        let g = random_graph(&RandomGraphConfig { vertices: 60, edge_prob: 0.08, attr_values: 14, max_attrs: 3, seed });
        assert!(g.attr_count() >= 12);
        let basic = run(&g, Algorithm::Basic);
        let partial = run(&g, Algorithm::Partial);
        assert_eq!(basic.stats.iterations.len(), partial.stats.iterations.len());
        for (b, p) in basic.stats.iterations.iter().zip(&partial.stats.iterations) {
            assert_eq!(b.evaluated_pairs, b.possible_pairs);
            basic_evals += b.evaluated_pairs;
            partial_evals += p.evaluated_pairs;
            iterations += 1;
        }
    }
    let ratio = partial_evals as f64 / basic_evals as f64;
    println!(
        "    mean evaluations per iteration: basic {:.1}, partial {:.1} (ratio {ratio:.3})",
        basic_evals as f64 / iterations as f64,
        partial_evals as f64 / iterations as f64
    );
    assert!(ratio < 1.0);
}

/// Brute-force completion score: best `−(2 − overlap/|L|) · bits` over the
/// a-stars whose core contains the value.
fn exhaustive_scores(result: &MiningResult, g: &AttributedGraph, v: astarmine::VertexId) -> Vec<f64> {
    let mut neighbourhood = BTreeSet::new();
    for &u in g.neighbors(v) {
        neighbourhood.extend(g.attributes(u).iter().map(|a| g.attr_label(*a).to_owned()));
    }
    let own: BTreeSet<&str> = g.attributes(v).iter().map(|a| g.attr_label(*a)).collect();
    (0..g.attr_count() as u32)
        .map(|i| {
            let label = g.attr_label(astarmine::AttrId(i));
            if neighbourhood.is_empty() || own.contains(label) {
                return SENTINEL;
            }
            let mut best = SENTINEL;
            for p in &result.patterns {
                if !p.coreset.values().iter().any(|a| g.attr_label(*a) == label) {
                    continue;
                }
                let leaves: Vec<&str> = p.leafset.values().iter().map(|a| g.attr_label(*a)).collect();
                let overlap = leaves.iter().filter(|l| neighbourhood.contains(**l)).count();
                let w = 2.0 - overlap as f64 / leaves.len() as f64;
                best = best.max(-w * p.code_bits);
            }
            best
        })
        .collect()
}

fn planted_completion() {
    for seed in 0..5 {
        let planted = planted_stars(&PlantConfig { noise: 0.1, seed, ..Default::default() });
        let g = &planted.graph;
        let result = run(g, Algorithm::Partial);
        let mut hits = 0;
        for &(v, truth) in &planted.held_out {
            let scores = score_node(&result.patterns, g, v);
            let oracle = exhaustive_scores(&result, g, v);
            assert_eq!(scores.0, oracle, "seed {seed}: scores differ from exhaustive oracle");
            if scores.top() == Some(truth) {
                hits += 1;
            }
        }
        let n = planted.held_out.len();
        assert!(n >= 10);
        let top1 = hits as f64 / n as f64;
        let baseline = 1.0 / g.attr_count() as f64;
        println!("    seed {seed}: top-1 {top1:.3} over {n} held-out nodes, uniform baseline {baseline:.3}");
        assert!(top1 >= 0.8);
        assert!(top1 >= 5.0 * baseline);
    }
}

fn coverage_metric() {
    let (g, library) = rule_fixture(&RuleFixtureConfig::default());
    assert_eq!(library.len(), 121);
    let result = run(&g, Algorithm::Partial);
    let found = label_pairs(&split_to_pairs(&result.patterns), &g);
    let ks: Vec<usize> = (1..=found.len()).collect();
    let curve = astarmine::rules::coverage_curve(&library, &found, &ks).unwrap();
    assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1), "coverage not monotone");
    assert_eq!(curve.last().unwrap().1, 1.0);
    let half = curve.iter().find(|(_, c)| *c >= 0.5).unwrap().0;
    println!("    {} pair rules found; half the library covered at k={half}, all at k={}", found.len(), curve.last().unwrap().0);
}

fn main() {
    let criteria: &[(&str, fn())] = &[
        ("inverted database of the running example", running_example_database),
        ("running example after the first merge", running_example_merge),
        ("gain equals from-scratch length difference", gain_oracle_equivalence),
        ("length monotone and telescoping", monotone_and_telescoping),
        ("lossless cover after every merge", lossless_cover),
        ("basic and partial mining byte-identical", basic_partial_equivalence),
        ("entropy identities", entropy_identities),
        ("unified merge formula matches closed forms", unified_merge_formula),
        ("partial update evaluates fewer pairs", partial_update_economy),
        ("planted pattern completion", planted_completion),
        ("coverage metric on planted rule library", coverage_metric),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{status}  {name} ({:.2}s)", start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
