use std::cmp::Ordering;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::encoding::Model;
use crate::error::{Error, Result};
use crate::graph::{AttrId, AttributedGraph, Coreset};
use crate::inverted::{InvertedDatabase, Leafset};

/// A mined attribute-star with its code length and rank.
#[derive(Debug, Clone, PartialEq)]
pub struct AStar {
    pub coreset: Coreset,
    pub leafset: Leafset,
    /// `Code_c + Code_L`.
    pub code_bits: f64,
    /// Number of positions of the line, `f_L`.
    pub frequency: u64,
    /// 1-based position in ascending `code_bits` order.
    pub rank: usize,
}

/// Ascending code length, then higher frequency, then coreset, then leafset.
pub fn rank_order(a: &AStar, b: &AStar) -> Ordering {
    a.code_bits
        .total_cmp(&b.code_bits)
        .then_with(|| b.frequency.cmp(&a.frequency))
        .then_with(|| a.coreset.cmp(&b.coreset))
        .then_with(|| a.leafset.cmp(&b.leafset))
}

pub fn assign_ranks(patterns: &mut [AStar]) {
    patterns.sort_by(rank_order);
    for (i, p) in patterns.iter_mut().enumerate() {
        p.rank = i + 1;
    }
}

/// One a-star per live line, ranked.
pub fn extract_patterns(model: &Model, db: &InvertedDatabase) -> Vec<AStar> {
    let mut out: Vec<AStar> = db
        .records()
        .map(|rec| AStar {
            coreset: db.coreset(rec.core).clone(),
            leafset: db.leafset(rec.leafset).clone(),
            code_bits: model.pattern_bits(rec.core, rec.leafset).unwrap_or(f64::INFINITY),
            frequency: rec.frequency(),
            rank: 0,
        })
        .collect();
    assign_ranks(&mut out);
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternLine {
    rank: usize,
    core: Vec<String>,
    leaves: Vec<String>,
    code_bits: f64,
    frequency: u64,
}

pub fn write_patterns_jsonl<W: Write>(patterns: &[AStar], graph: &AttributedGraph, mut out: W) -> Result<()> {
    let labels = |v: &[AttrId]| v.iter().map(|a| graph.attr_label(*a).to_owned()).collect();
    for p in patterns {
        let line = PatternLine {
            rank: p.rank,
            core: labels(p.coreset.values()),
            leaves: labels(p.leafset.values()),
            code_bits: p.code_bits,
            frequency: p.frequency,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n").map_err(|e| Error::io("<patterns>", e))?;
    }
    Ok(())
}

/// Reads a pattern file back against the graph it was mined from.
pub fn read_patterns_jsonl<R: BufRead>(reader: R, graph: &AttributedGraph) -> Result<Vec<AStar>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PatternLine = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let ids = |labels: &[String]| -> Result<Vec<AttrId>> {
            labels
                .iter()
                .map(|l| graph.attr_id(l).ok_or_else(|| Error::parse(lineno, format!("unknown attribute {l:?}"))))
                .collect()
        };
        let coreset = Coreset::new(ids(&p.core)?).ok_or_else(|| Error::parse(lineno, "empty core"))?;
        let leafset = Leafset::new(ids(&p.leaves)?).ok_or_else(|| Error::parse(lineno, "empty leaves"))?;
        out.push(AStar { coreset, leafset, code_bits: p.code_bits, frequency: p.frequency, rank: p.rank });
    }
    Ok(out)
}
