//! Node attribute completion from mined a-stars, score fusion with an
//! external model, and ranking metrics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{AttrId, AttributedGraph, VertexId};
use crate::miner::AStar;

/// Score of an attribute no a-star supports.
pub const SENTINEL: f64 = f64::NEG_INFINITY;

/// Per-attribute scores indexed by [`AttrId`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn sentinel(len: usize) -> Self {
        ScoreVector(vec![SENTINEL; len])
    }

    pub fn get(&self, a: AttrId) -> f64 {
        self.0[a.index()]
    }

    pub fn is_all_sentinel(&self) -> bool {
        self.0.iter().all(|s| *s == SENTINEL)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Supported attributes, best first; ties go to the smaller id.
    pub fn ranked(&self) -> Vec<(AttrId, f64)> {
        let mut out: Vec<(AttrId, f64)> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != SENTINEL)
            .map(|(i, s)| (AttrId(i as u32), *s))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    pub fn top(&self) -> Option<AttrId> {
        self.ranked().first().map(|(a, _)| *a)
    }
}

/// Dissimilarity weight between an a-star's leafset and the attributes seen
/// around a node. Larger means less similar.
pub trait Similarity: Sync {
    fn weight(&self, leafset: &[AttrId], neighbor_attrs: &[AttrId]) -> f64;
}

/// `w = 2 − |L ∩ N| / |L|`, in `[1, 2]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapWeight;

impl Similarity for OverlapWeight {
    fn weight(&self, leafset: &[AttrId], neighbor_attrs: &[AttrId]) -> f64 {
        similarity_weight(leafset, neighbor_attrs)
    }
}

/// `w = 2 − |L ∩ N| / |L ∪ N|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardWeight;

impl Similarity for JaccardWeight {
    fn weight(&self, leafset: &[AttrId], neighbor_attrs: &[AttrId]) -> f64 {
        let common = overlap(leafset, neighbor_attrs);
        let union = leafset.len() + neighbor_attrs.len() - common;
        if union == 0 {
            return 2.0;
        }
        2.0 - common as f64 / union as f64
    }
}

fn overlap(a: &[AttrId], b: &[AttrId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Both slices must be sorted.
pub fn similarity_weight(leafset: &[AttrId], neighbor_attrs: &[AttrId]) -> f64 {
    if leafset.is_empty() {
        return 2.0;
    }
    2.0 - overlap(leafset, neighbor_attrs) as f64 / leafset.len() as f64
}

/// Scores every attribute value for `v` with [`OverlapWeight`].
pub fn score_node(patterns: &[AStar], graph: &AttributedGraph, v: VertexId) -> ScoreVector {
    score_node_with(patterns, graph, v, &OverlapWeight)
}

/// Each a-star scores its core values with `−w · code_bits`; an attribute
/// keeps its best score. Values already on `v` stay at the sentinel.
pub fn score_node_with(patterns: &[AStar], graph: &AttributedGraph, v: VertexId, sim: &dyn Similarity) -> ScoreVector {
    let mut scores = ScoreVector::sentinel(graph.attr_count());
    let neighbors = graph.neighbor_attributes(v);
    if neighbors.is_empty() {
        log::warn!("vertex {} has no attributed neighbours", graph.vertex_label(v));
        return scores;
    }
    let own = graph.attributes(v);
    for p in patterns {
        let w = sim.weight(p.leafset.values(), &neighbors);
        let cl = -w * p.code_bits;
        for &a in p.coreset.values() {
            if a.index() >= scores.len() || own.binary_search(&a).is_ok() {
                continue;
            }
            if cl > scores.0[a.index()] {
                scores.0[a.index()] = cl;
            }
        }
    }
    scores
}

/// [`score_node`] over many vertices in parallel; output order follows input.
pub fn score_nodes(patterns: &[AStar], graph: &AttributedGraph, vertices: &[VertexId]) -> Vec<ScoreVector> {
    vertices.par_iter().map(|v| score_node(patterns, graph, *v)).collect()
}

/// Min-max scaling to `[0, 1]`. Sentinels take the minimum finite value; a
/// constant vector maps to all ones.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        log::debug!("constant score vector of length {} normalized to ones", values.len());
        return vec![1.0; values.len()];
    }
    values
        .iter()
        .map(|&v| if v.is_finite() { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// Normalizes both vectors separately and multiplies them element-wise.
pub fn fuse_scores(model_scores: &ScoreVector, external: &[f64]) -> Result<Vec<f64>> {
    if model_scores.len() != external.len() {
        return Err(Error::Input(format!(
            "score vectors differ in length: {} vs {}",
            model_scores.len(),
            external.len()
        )));
    }
    let a = min_max_normalize(&model_scores.0);
    let b = min_max_normalize(external);
    Ok(a.iter().zip(&b).map(|(x, y)| x * y).collect())
}

/// `|top-k ∩ truth| / |truth|`; `None` for an empty truth set.
pub fn recall_at_k<T: PartialEq>(ranking: &[T], truth: &[T], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let hits = ranking.iter().take(k).filter(|r| truth.contains(r)).count();
    Some(hits as f64 / truth.len() as f64)
}

/// Binary-relevance NDCG with `log₂(rank + 1)` discounting.
pub fn ndcg_at_k<T: PartialEq>(ranking: &[T], truth: &[T], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, r)| truth.contains(r))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..truth.len().min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    Some(dcg / ideal)
}

/// Mean metrics at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRow {
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
    pub nodes: usize,
    pub skipped: usize,
}

/// Averages recall and NDCG over nodes; nodes with empty truth are skipped
/// and counted.
pub fn evaluate_rankings<T: PartialEq>(cases: &[(Vec<T>, Vec<T>)], ks: &[usize]) -> Vec<MetricRow> {
    ks.iter()
        .map(|&k| {
            let (mut recall, mut ndcg, mut nodes, mut skipped) = (0.0, 0.0, 0, 0);
            for (ranking, truth) in cases {
                match (recall_at_k(ranking, truth, k), ndcg_at_k(ranking, truth, k)) {
                    (Some(r), Some(n)) => {
                        recall += r;
                        ndcg += n;
                        nodes += 1;
                    }
                    _ => skipped += 1,
                }
            }
            let denom = nodes.max(1) as f64;
            MetricRow { k, recall: recall / denom, ndcg: ndcg / denom, nodes, skipped }
        })
        .collect()
}
