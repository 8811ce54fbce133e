mod common;

use std::collections::BTreeSet;

use astarmine::synth::{random_graph, RandomGraphConfig};
use astarmine::{build_mapping_table, load_coresets, load_graph, AttributedGraph, Coreset, Error};
use proptest::prelude::*;

fn graphs() -> impl Strategy<Value = AttributedGraph> {
    (1usize..30, 0.0f64..0.6, 1usize..9, 0usize..4, any::<u64>()).prop_map(
        |(vertices, edge_prob, attr_values, max_attrs, seed)| {
            random_graph(&RandomGraphConfig { vertices, edge_prob, attr_values, max_attrs, seed })
        },
    )
}

fn serialize(g: &AttributedGraph) -> (Vec<u8>, Vec<u8>) {
    let (mut e, mut a) = (Vec::new(), Vec::new());
    g.write_edges(&mut e).unwrap();
    g.write_attrs(&mut a).unwrap();
    (e, a)
}

fn edge_set(g: &AttributedGraph) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for v in g.vertices() {
        for &u in g.neighbors(v) {
            out.insert((g.vertex_label(v).to_owned(), g.vertex_label(u).to_owned()));
        }
    }
    out
}

fn attr_sets(g: &AttributedGraph) -> BTreeSet<(String, Vec<String>)> {
    g.vertices()
        .map(|v| {
            let values = g.attributes(v).iter().map(|a| g.attr_label(*a).to_owned()).collect();
            (g.vertex_label(v).to_owned(), values)
        })
        .collect()
}

proptest! {
    #[test]
    fn round_trip(g in graphs()) {
        let (e, a) = serialize(&g);
        let (h, summary) = load_graph(&e[..], &a[..]).unwrap();
        prop_assert_eq!(summary.self_loops, 0);
        prop_assert_eq!(summary.duplicate_edges, 0);
        prop_assert_eq!(h.vertex_count(), g.vertex_count());
        prop_assert_eq!(h.edge_count(), g.edge_count());
        prop_assert_eq!(edge_set(&h), edge_set(&g));
        prop_assert_eq!(attr_sets(&h), attr_sets(&g));
        prop_assert_eq!(h.attr_labels(), g.attr_labels());
        prop_assert_eq!(serialize(&h), (e, a));
    }

    #[test]
    fn adjacency_is_symmetric(g in graphs()) {
        for v in g.vertices() {
            for &u in g.neighbors(v) {
                prop_assert!(g.neighbors(u).contains(&v));
                prop_assert!(u != v);
            }
        }
    }

    #[test]
    fn mapping_matches_brute_force(g in graphs(), picks in proptest::collection::vec(proptest::collection::vec(0u32..8, 1..4), 0..10)) {
        let n = g.attr_count() as u32;
        prop_assume!(n > 0);
        let coresets: Vec<Coreset> = picks
            .iter()
            .filter_map(|p| Coreset::new(p.iter().map(|i| astarmine::AttrId(i % n))))
            .collect();
        let mapping = build_mapping_table(&g, &coresets);
        for c in &coresets {
            let id = mapping.get(c).unwrap();
            let listed: BTreeSet<_> = mapping.positions(id).iter().copied().collect();
            let expected: BTreeSet<_> = g
                .vertices()
                .filter(|v| c.values().iter().all(|a| g.attributes(*v).contains(a)))
                .collect();
            prop_assert_eq!(listed, expected);
        }
    }
}

#[test]
fn duplicate_edges_and_self_loops_are_counted() {
    let (g, summary) = load_graph("u\tv\nv\tu\nu\tu\n".as_bytes(), "u\tx\n".as_bytes()).unwrap();
    assert_eq!(g.edge_count(), 1);
    assert_eq!(summary.duplicate_edges, 1);
    assert_eq!(summary.self_loops, 1);
}

#[test]
fn malformed_line_reports_its_number() {
    let err = load_graph("# header\nu\tv\nbroken\n".as_bytes(), "".as_bytes()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn coreset_file_drops_unknown_values() {
    let g = common::running_example();
    let (cores, unknown) = load_coresets("a,b\nz\n# note\nc\n".as_bytes(), &g).unwrap();
    assert_eq!(unknown, 1);
    assert_eq!(cores.len(), 2);
    let mapping = build_mapping_table(&g, &cores);
    let ab = mapping.get(&cores[0]).unwrap();
    let labels: Vec<_> = mapping.positions(ab).iter().map(|v| g.vertex_label(*v)).collect();
    assert_eq!(labels, ["v5"]);
}
