//! Pair rules derived from a-stars and their coverage of a rule library.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttrId, AttributedGraph};
use crate::miner::pattern::rank_order;
use crate::miner::AStar;

/// A (core value → leaf value) rule inheriting its a-star's score.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRule {
    pub cause: AttrId,
    pub derivative: AttrId,
    /// Code length of the originating a-star.
    pub score: f64,
    pub rank: usize,
}

/// Expands every a-star into `|core| · |leaves|` pairs. A pair produced by
/// several a-stars keeps its best-ranked occurrence.
pub fn split_to_pairs(patterns: &[AStar]) -> Vec<PairRule> {
    let mut ordered: Vec<&AStar> = patterns.iter().collect();
    ordered.sort_by(|a, b| rank_order(a, b));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in ordered {
        for &cause in p.coreset.values() {
            for &derivative in p.leafset.values() {
                if seen.insert((cause, derivative)) {
                    out.push(PairRule { cause, derivative, score: p.code_bits, rank: out.len() + 1 });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelledRule {
    pub cause: String,
    pub derivative: String,
}

/// Set of valid (cause, derivative) label pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleLibrary {
    rules: BTreeSet<(String, String)>,
}

impl RuleLibrary {
    pub fn new(rules: impl IntoIterator<Item = (String, String)>) -> Self {
        RuleLibrary { rules: rules.into_iter().collect() }
    }

    /// JSON array of `{"cause": ..., "derivative": ...}`.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let rules: Vec<LabelledRule> = serde_json::from_reader(reader)?;
        Ok(Self::new(rules.into_iter().map(|r| (r.cause, r.derivative))))
    }

    pub fn to_json(&self) -> Result<String> {
        let rules: Vec<LabelledRule> = self
            .rules
            .iter()
            .map(|(c, d)| LabelledRule { cause: c.clone(), derivative: d.clone() })
            .collect();
        Ok(serde_json::to_string_pretty(&rules)?)
    }

    pub fn contains(&self, cause: &str, derivative: &str) -> bool {
        self.rules.contains(&(cause.to_owned(), derivative.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Label pairs of `rules`, in order.
pub fn label_pairs(rules: &[PairRule], graph: &AttributedGraph) -> Vec<(String, String)> {
    rules
        .iter()
        .map(|r| (graph.attr_label(r.cause).to_owned(), graph.attr_label(r.derivative).to_owned()))
        .collect()
}

/// `|valid ∩ top-k found| / |valid|`.
pub fn coverage_ratio(valid: &RuleLibrary, found: &[(String, String)], k: usize) -> Result<f64> {
    if valid.is_empty() {
        return Err(Error::Input("empty rule library".into()));
    }
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let hits: HashSet<&(String, String)> = found.iter().take(k).filter(|r| valid.rules.contains(*r)).collect();
    Ok(hits.len() as f64 / valid.len() as f64)
}

/// Coverage at each cutoff in `ks`.
pub fn coverage_curve(valid: &RuleLibrary, found: &[(String, String)], ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    ks.iter().map(|&k| Ok((k, coverage_ratio(valid, found, k)?))).collect()
}
