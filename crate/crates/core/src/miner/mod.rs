//! Greedy leafset merging.
//!
//! Two drivers share one state machine. [`Algorithm::Basic`] regenerates
//! every pair gain before each merge. [`Algorithm::Partial`] keeps a
//! candidate heap and a related-leafset dictionary and, after each merge,
//! re-evaluates only pairs that share a coreset whose lines changed. Pairs
//! sharing no changed coreset keep their exact gain, so both drivers pop the
//! same pair every iteration.

pub mod candidates;
pub mod gain;
pub mod pattern;

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{LengthReport, Model};
use crate::error::{Error, Result};
use crate::graph::{build_mapping_table, singleton_coresets, AttributedGraph, CoreId, Coreset, MappingTable};
use crate::inverted::{InvertedDatabase, Leafset, LeafsetId, MergeReport};

pub use candidates::{canonical, Candidate, CandidateStore, RelatedDict};
pub use gain::{data_gain, net_gain, GainMode, MIN_GAIN};
pub use pattern::{extract_patterns, read_patterns_jsonl, write_patterns_jsonl, AStar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Algorithm {
    Basic,
    #[default]
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MinerConfig {
    pub algorithm: Algorithm,
    pub gain: GainMode,
}

/// Pairs below this count are evaluated on the calling thread.
const PAR_THRESHOLD: usize = 256;

fn evaluate_pairs(
    db: &InvertedDatabase,
    model: &Model,
    mode: GainMode,
    pairs: &[(LeafsetId, LeafsetId)],
) -> Vec<f64> {
    let eval = |&(x, y): &(LeafsetId, LeafsetId)| gain::evaluate(db, model, x, y).value(mode);
    if pairs.len() < PAR_THRESHOLD {
        pairs.iter().map(eval).collect()
    } else {
        pairs.par_iter().map(eval).collect()
    }
}

fn all_pairs(live: &[LeafsetId]) -> Vec<(LeafsetId, LeafsetId)> {
    let mut pairs = Vec::with_capacity(live.len() * live.len().saturating_sub(1) / 2);
    for (i, &x) in live.iter().enumerate() {
        for &y in &live[i + 1..] {
            pairs.push((x, y));
        }
    }
    pairs
}

fn pair_count(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// Every leafset pair with gain above [`MIN_GAIN`], in pop order. Also
/// returns the number of pairs evaluated.
pub fn generate_candidates(db: &InvertedDatabase, model: &Model, mode: GainMode) -> (Vec<Candidate>, u64) {
    let live = db.live_leafsets();
    let pairs = all_pairs(&live);
    let gains = evaluate_pairs(db, model, mode, &pairs);
    let mut out: Vec<Candidate> = pairs
        .iter()
        .zip(gains)
        .filter(|(_, g)| *g > MIN_GAIN)
        .map(|(&(x, y), gain)| Candidate { x, y, gain, stamp: 0 })
        .collect();
    out.sort_by(|a, b| candidates::pop_order(db, a, b));
    (out, pairs.len() as u64)
}

/// Incremental candidate maintenance after `report`'s merge.
///
/// Removes pairs of leafsets that vanished, then re-evaluates every pair of
/// live leafsets that had or has a line at a coreset where positions moved.
/// This covers the new leafset, the partly merged inputs, and bystander pairs
/// whose gain changed through the shrinking coreset totals. Returns the
/// number of gains evaluated.
pub fn update_after_merge(
    store: &mut CandidateStore,
    partners: &mut RelatedDict,
    report: &MergeReport,
    db: &InvertedDatabase,
    model: &Model,
    mode: GainMode,
) -> u64 {
    for &dead in &report.total {
        for partner in partners.remove_leafset(dead) {
            let (a, b) = canonical(db, dead, partner);
            store.remove(a, b);
        }
    }
    // the merged pair itself never survives as a candidate
    if store.remove(report.x, report.y) || store.remove(report.y, report.x) {
        partners.remove_pair(report.x, report.y);
    }

    let mut pairs = BTreeSet::new();
    for m in &report.cores {
        let mut members: Vec<LeafsetId> = db.column(m.core).map(|r| r.leafset).collect();
        members.extend([report.x, report.y]);
        members.retain(|l| db.is_live(*l));
        members.sort_by(|a, b| db.leafset(*a).cmp(db.leafset(*b)));
        members.dedup();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                pairs.insert((a, b));
            }
        }
    }
    let pairs: Vec<_> = pairs.into_iter().collect();
    let gains = evaluate_pairs(db, model, mode, &pairs);
    for (&(x, y), g) in pairs.iter().zip(gains) {
        if g > MIN_GAIN {
            store.upsert(db, x, y, g);
            partners.insert(x, y);
        } else {
            store.remove(x, y);
            partners.remove_pair(x, y);
        }
    }
    store.compact();
    pairs.len() as u64
}

/// One row of the per-iteration report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Gains computed to produce the candidates this iteration drew from.
    pub evaluated_pairs: u64,
    /// Unordered pairs of live leafsets at that time.
    pub possible_pairs: u64,
    pub update_ratio: f64,
    /// Merged pair; `None` on the terminating row.
    pub accepted: Option<(Leafset, Leafset)>,
    pub net_gain_bits: f64,
    pub data_gain_bits: f64,
    /// Lengths after this iteration's merge.
    pub lengths: LengthReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MinerStats {
    pub iterations: Vec<IterationStats>,
}

impl MinerStats {
    pub fn merges(&self) -> usize {
        self.iterations.iter().filter(|s| s.accepted.is_some()).count()
    }

    pub fn mean_evaluated(&self) -> f64 {
        if self.iterations.is_empty() {
            return 0.0;
        }
        self.iterations.iter().map(|s| s.evaluated_pairs as f64).sum::<f64>() / self.iterations.len() as f64
    }

    /// CSV with one row per iteration. Leafsets are written as their
    /// comma-joined labels.
    pub fn write_csv<W: Write>(&self, graph: &AttributedGraph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "evaluated_pairs",
            "possible_pairs",
            "update_ratio",
            "accepted_x",
            "accepted_y",
            "net_gain_bits",
            "total_bits",
        ])?;
        let label = |l: &Leafset| -> String {
            l.values().iter().map(|a| graph.attr_label(*a)).collect::<Vec<_>>().join(",")
        };
        for s in &self.iterations {
            let (ax, ay) = match &s.accepted {
                Some((x, y)) => (label(x), label(y)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                s.iteration.to_string(),
                s.evaluated_pairs.to_string(),
                s.possible_pairs.to_string(),
                s.update_ratio.to_string(),
                ax,
                ay,
                s.net_gain_bits.to_string(),
                s.lengths.bits_total.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<stats>", e))?;
        Ok(())
    }
}

/// A merge accepted by [`Miner::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub x: LeafsetId,
    pub y: LeafsetId,
    /// Gain the pair was selected with, under the configured mode.
    pub gain: f64,
    pub report: MergeReport,
}

/// Mining state: the database, the model and the candidate bookkeeping.
#[derive(Debug, Clone)]
pub struct Miner {
    config: MinerConfig,
    mapping: MappingTable,
    db: InvertedDatabase,
    model: Model,
    store: CandidateStore,
    partners: RelatedDict,
    /// Evaluations behind the current store, and the pair count then.
    pending: Option<(u64, u64)>,
    stats: MinerStats,
    done: bool,
}

/// Output of a completed run.
#[derive(Debug, Clone)]
pub struct MiningResult {
    pub mapping: MappingTable,
    pub db: InvertedDatabase,
    pub model: Model,
    pub patterns: Vec<AStar>,
    pub stats: MinerStats,
}

impl Miner {
    /// Builds the mapping table, inverted database and model. `coresets`
    /// defaults to one singleton per attribute value.
    pub fn new(graph: &AttributedGraph, coresets: Option<&[Coreset]>, config: MinerConfig) -> Result<Self> {
        let defaults;
        let coresets = match coresets {
            Some(c) => c,
            None => {
                defaults = singleton_coresets(graph);
                &defaults
            }
        };
        let mapping = build_mapping_table(graph, coresets);
        let db = InvertedDatabase::build(graph, &mapping);
        let model = Model::build(graph, &mapping, &db)?;
        Ok(Miner {
            config,
            mapping,
            db,
            model,
            store: CandidateStore::new(),
            partners: RelatedDict::default(),
            pending: None,
            stats: MinerStats::default(),
            done: false,
        })
    }

    pub fn db(&self) -> &InvertedDatabase {
        &self.db
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn mapping(&self) -> &MappingTable {
        &self.mapping
    }

    pub fn stats(&self) -> &MinerStats {
        &self.stats
    }

    pub fn config(&self) -> MinerConfig {
        self.config
    }

    pub fn candidates(&self) -> &CandidateStore {
        &self.store
    }

    pub fn related(&self) -> &RelatedDict {
        &self.partners
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn refill(&mut self) {
        let (cands, evaluated) = generate_candidates(&self.db, &self.model, self.config.gain);
        self.store = CandidateStore::new();
        self.partners = RelatedDict::default();
        for c in cands {
            self.store.upsert(&self.db, c.x, c.y, c.gain);
            self.partners.insert(c.x, c.y);
        }
        self.pending = Some((evaluated, pair_count(self.db.live_leafsets().len())));
    }

    /// Performs one greedy iteration. Returns `None` once no pair improves
    /// the description length.
    pub fn step(&mut self) -> Result<Option<MergeStep>> {
        if self.done {
            return Ok(None);
        }
        if self.config.algorithm == Algorithm::Basic || self.pending.is_none() {
            self.refill();
        }
        let (evaluated, possible) = self.pending.take().unwrap_or_default();
        if self.store.is_empty() != self.partners.is_empty() {
            log::debug!("candidate store and related dict disagree on emptiness");
        }
        let iteration = self.stats.iterations.len() + 1;
        let ratio = if possible == 0 { 0.0 } else { evaluated as f64 / possible as f64 };

        let Some(best) = self.store.pop() else {
            self.done = true;
            self.stats.iterations.push(IterationStats {
                iteration,
                evaluated_pairs: evaluated,
                possible_pairs: possible,
                update_ratio: ratio,
                accepted: None,
                net_gain_bits: 0.0,
                data_gain_bits: 0.0,
                lengths: LengthReport::measure(&self.model, &self.db),
            });
            return Ok(None);
        };
        self.partners.remove_pair(best.x, best.y);

        let g = gain::evaluate(&self.db, &self.model, best.x, best.y);
        let report = self.db.apply_merge(best.x, best.y);
        if report.is_noop() {
            return Err(Error::Invariant("selected candidate has no co-occurrence".into()));
        }
        let cores: Vec<CoreId> = report.cores.iter().map(|m| m.core).collect();
        self.model.ct_l.refresh(&self.db, &cores)?;

        if self.config.algorithm == Algorithm::Partial {
            let evaluated =
                update_after_merge(&mut self.store, &mut self.partners, &report, &self.db, &self.model, self.config.gain);
            self.pending = Some((evaluated, pair_count(self.db.live_leafsets().len())));
        }

        self.stats.iterations.push(IterationStats {
            iteration,
            evaluated_pairs: evaluated,
            possible_pairs: possible,
            update_ratio: ratio,
            accepted: Some((self.db.leafset(best.x).clone(), self.db.leafset(best.y).clone())),
            net_gain_bits: g.net(),
            data_gain_bits: g.data,
            lengths: LengthReport::measure(&self.model, &self.db),
        });
        Ok(Some(MergeStep { x: best.x, y: best.y, gain: best.gain, report }))
    }

    pub fn run(mut self) -> Result<MiningResult> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    pub fn finish(self) -> MiningResult {
        let patterns = extract_patterns(&self.model, &self.db);
        MiningResult { mapping: self.mapping, db: self.db, model: self.model, patterns, stats: self.stats }
    }
}

/// Full regeneration of candidates before every merge.
pub fn mine_basic(graph: &AttributedGraph) -> Result<MiningResult> {
    Miner::new(graph, None, MinerConfig { algorithm: Algorithm::Basic, gain: GainMode::Net })?.run()
}

/// Incremental candidate maintenance between merges.
pub fn mine_partial(graph: &AttributedGraph) -> Result<MiningResult> {
    Miner::new(graph, None, MinerConfig { algorithm: Algorithm::Partial, gain: GainMode::Net })?.run()
}
