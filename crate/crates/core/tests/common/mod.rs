//! Brute-force oracles shared by the integration suites. Everything here works
//! from labels and plain enumeration so it shares no code paths with the
//! library's indexed structures.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use astarmine::synth::{random_graph, RandomGraphConfig};
use astarmine::{AttributedGraph, InvertedDatabase, Model};

pub const RUNNING_EDGES: &str = "v1\tv2\nv1\tv3\nv1\tv4\nv3\tv5\nv4\tv5\n";
pub const RUNNING_ATTRS: &str = "v1\ta\nv2\ta,c\nv3\tc\nv4\tb\nv5\ta,b\n";

pub fn running_example() -> AttributedGraph {
    astarmine::load_graph(RUNNING_EDGES.as_bytes(), RUNNING_ATTRS.as_bytes()).unwrap().0
}

/// `count` seeded random graphs with at most 30 vertices and 8 attribute
/// values, skipping draws that carry no attribute at all.
pub fn corpus(count: usize) -> impl Iterator<Item = (u64, AttributedGraph)> {
    (0u64..)
        .map(|seed| (seed, small_random(seed)))
        .filter(|(_, g)| g.attr_count() > 0)
        .take(count)
}

pub fn small_random(seed: u64) -> AttributedGraph {
    // vary the shape deterministically from the seed
    let vertices = 2 + (seed * 7 % 29) as usize;
    let attr_values = 1 + (seed * 5 % 8) as usize;
    let edge_prob = 0.08 + (seed % 5) as f64 * 0.08;
    let max_attrs = 1 + (seed % 3) as usize;
    random_graph(&RandomGraphConfig { vertices, edge_prob, attr_values, max_attrs, seed })
}

/// (core labels, leaf labels) → position labels.
pub type Lines = BTreeMap<(Vec<String>, Vec<String>), BTreeSet<String>>;

/// Initial database by enumerating every (centre, neighbour, value) triple
/// with singleton coresets.
pub fn enumerate_initial_lines(g: &AttributedGraph) -> Lines {
    let mut out = Lines::new();
    for v in g.vertices() {
        for &core in g.attributes(v) {
            for &u in g.neighbors(v) {
                for &leaf in g.attributes(u) {
                    let key = (vec![g.attr_label(core).to_owned()], vec![g.attr_label(leaf).to_owned()]);
                    out.entry(key).or_default().insert(g.vertex_label(v).to_owned());
                }
            }
        }
    }
    out
}

pub fn db_lines(db: &InvertedDatabase, g: &AttributedGraph) -> Lines {
    let labels = |v: &[astarmine::AttrId]| v.iter().map(|a| g.attr_label(*a).to_owned()).collect::<Vec<_>>();
    let mut out = Lines::new();
    for rec in db.records() {
        let key = (labels(db.coreset(rec.core).values()), labels(db.leafset(rec.leafset).values()));
        let pos: BTreeSet<String> = rec.positions.iter().map(|p| g.vertex_label(*p).to_owned()).collect();
        assert!(out.insert(key, pos).is_none(), "duplicate line");
    }
    out
}

/// (position, core value, leaf value) facts of the initial database.
pub fn enumerate_facts(g: &AttributedGraph) -> BTreeSet<(String, String, String)> {
    let mut out = BTreeSet::new();
    for ((core, leaves), positions) in enumerate_initial_lines(g) {
        for p in positions {
            out.insert((p, core[0].clone(), leaves[0].clone()));
        }
    }
    out
}

/// Facts of a database as a multiset, so double coverage shows up.
pub fn db_fact_counts(db: &InvertedDatabase, g: &AttributedGraph) -> BTreeMap<(String, String, String), usize> {
    let mut out = BTreeMap::new();
    for ((core, leaves), positions) in db_lines(db, g) {
        for p in &positions {
            for l in &leaves {
                *out.entry((p.clone(), core.join(","), l.clone())).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Frequency matrix: per coreset, the line frequencies.
pub fn frequency_matrix(db: &InvertedDatabase) -> Vec<Vec<u64>> {
    (0..db.core_count() as u32)
        .map(|c| db.column(astarmine::CoreId(c)).map(|r| r.frequency()).collect())
        .collect()
}

/// `s · H(Y|X)` from joint and conditional probabilities.
pub fn entropy_bits(matrix: &[Vec<u64>]) -> f64 {
    let s: u64 = matrix.iter().flatten().sum();
    if s == 0 {
        return 0.0;
    }
    let mut h = 0.0;
    for column in matrix {
        let c: u64 = column.iter().sum();
        for &l in column {
            let joint = l as f64 / s as f64;
            let cond = l as f64 / c as f64;
            h -= joint * cond.log2();
        }
    }
    s as f64 * h
}

/// Sum over lines of `f_L · Code_L`.
pub fn usage_weighted_code_bits(matrix: &[Vec<u64>]) -> f64 {
    let mut bits = 0.0;
    for column in matrix {
        let c: u64 = column.iter().sum();
        for &l in column {
            bits += l as f64 * -(l as f64 / c as f64).log2();
        }
    }
    bits
}

/// Standard code lengths from value counts over all vertices.
pub fn standard_codes(g: &AttributedGraph) -> HashMap<String, f64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for v in g.vertices() {
        for &a in g.attributes(v) {
            *counts.entry(g.attr_label(a).to_owned()).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts.into_iter().map(|(k, n)| (k, -(n as f64 / total as f64).log2())).collect()
}

/// Total description length with singleton coresets, recomputed from the
/// lines alone.
pub fn total_bits(g: &AttributedGraph, db: &InvertedDatabase) -> f64 {
    let st = standard_codes(g);
    // core table: every value spelled once and given its own code
    let mut bits: f64 = st.values().map(|b| 2.0 * b).sum();
    let lines = db_lines(db, g);
    let mut totals: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for ((core, _), pos) in &lines {
        *totals.entry(core.clone()).or_insert(0) += pos.len() as u64;
    }
    for ((core, leaves), pos) in &lines {
        let spell: f64 = leaves.iter().map(|l| st[l]).sum();
        let code_c = st[&core[0]];
        let code_l = -(pos.len() as f64 / totals[core] as f64).log2();
        bits += spell + code_c + code_l;
    }
    bits + entropy_bits(&frequency_matrix(db))
}

pub fn data_bits(db: &InvertedDatabase) -> f64 {
    entropy_bits(&frequency_matrix(db))
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
}

pub fn model_of(g: &AttributedGraph) -> (astarmine::MappingTable, InvertedDatabase, Model) {
    let mapping = astarmine::build_mapping_table(g, &astarmine::singleton_coresets(g));
    let db = InvertedDatabase::build(g, &mapping);
    let model = Model::build(g, &mapping, &db).unwrap();
    (mapping, db, model)
}
