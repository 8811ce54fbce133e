//! Description-length gain of merging two leafsets.
//!
//! Only coresets where the two leafsets actually co-occur contribute; every
//! other coreset keeps its lines and its total, so both the data term and the
//! model term vanish there.

use serde::{Deserialize, Serialize};

use crate::encoding::{xlog2x, Model};
use crate::graph::CoreId;
use crate::inverted::{intersect_count, InvertedDatabase, LeafsetId, MergeCase};

/// Smallest gain that counts as an improvement. Gains at or below this are
/// treated as zero so floating-point noise never drives a merge.
pub const MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GainMode {
    /// Data gain minus the change in model cost.
    #[default]
    Net,
    /// Data gain alone.
    DataOnly,
}

/// Leaf-frequency term for one coreset:
/// `x log x + y log y − [(x−xy) log(x−xy) + (y−xy) log(y−xy) + xy log xy]`.
pub fn merge_term(x: u64, y: u64, xy: u64) -> f64 {
    merge_term_into(x, y, 0, xy)
}

/// [`merge_term`] when the merged leafset already has a line of frequency
/// `z` at the same coreset; the moved positions join it.
pub fn merge_term_into(x: u64, y: u64, z: u64, xy: u64) -> f64 {
    (xlog2x(x) + xlog2x(y) + xlog2x(z)) - (xlog2x(x - xy) + xlog2x(y - xy) + xlog2x(z + xy))
}

/// Closed forms of the leaf-frequency term for each merge case.
pub fn closed_form_term(case: MergeCase, x: u64, y: u64, xy: u64) -> f64 {
    let lg = |n: u64| (n as f64).log2();
    let xyf = xy as f64;
    match case {
        MergeCase::Disjoint => 0.0,
        MergeCase::PartlyMerged => merge_term(x, y, xy),
        MergeCase::BothTotallyMerged => xyf * lg(xy),
        MergeCase::FirstTotallyMerged => y as f64 * (lg(y) - lg(y - xy)) + xyf * lg(y - xy),
        MergeCase::SecondTotallyMerged => x as f64 * (lg(x) - lg(x - xy)) + xyf * lg(x - xy),
    }
}

/// Coreset-total term for one coreset: `c log c − (c−xy) log(c−xy)`.
pub fn core_term(c: u64, xy: u64) -> f64 {
    xlog2x(c) - xlog2x(c - xy)
}

/// Change of every frequency at one coreset that a merge would cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreDelta {
    pub core: CoreId,
    pub x: u64,
    pub y: u64,
    /// Frequency of an existing `x ∪ y` line at this coreset, else 0.
    pub z: u64,
    pub xy: u64,
    pub total: u64,
    pub rows: u64,
}

impl CoreDelta {
    pub fn case(&self) -> MergeCase {
        MergeCase::classify(self.x, self.y, self.xy)
    }

    pub fn data_gain(&self) -> f64 {
        core_term(self.total, self.xy) - merge_term_into(self.x, self.y, self.z, self.xy)
    }

    fn rows_after(&self) -> u64 {
        self.rows - u64::from(self.x == self.xy) - u64::from(self.y == self.xy) + u64::from(self.z == 0)
    }

    /// Change of `Σ Code_L` over the lines of this coreset.
    fn leaf_code_delta(&self) -> f64 {
        let lg = |n: u64| if n == 0 { 0.0 } else { (n as f64).log2() };
        let before_logs = lg(self.x) + lg(self.y) + lg(self.z);
        let after_logs = lg(self.x - self.xy) + lg(self.y - self.xy) + lg(self.z + self.xy);
        let after = self.rows_after() as f64 * lg(self.total - self.xy);
        let before = self.rows as f64 * lg(self.total);
        (after - before) - (after_logs - before_logs)
    }
}

/// Per-coreset deltas of a hypothetical merge, ascending by coreset id,
/// restricted to coresets where the pair co-occurs.
pub fn core_deltas(db: &InvertedDatabase, x: LeafsetId, y: LeafsetId) -> Vec<CoreDelta> {
    let mut out = Vec::new();
    let mut merged: Option<Option<LeafsetId>> = None;
    for core in db.shared_cores(x, y) {
        let (Some(px), Some(py)) = (db.positions(core, x), db.positions(core, y)) else { continue };
        let xy = intersect_count(px, py);
        if xy == 0 {
            continue;
        }
        let merged = *merged.get_or_insert_with(|| db.leafset_id(&db.leafset(x).union(db.leafset(y))));
        let z = merged
            .filter(|m| *m != x && *m != y)
            .and_then(|m| db.positions(core, m))
            .map_or(0, |p| p.len() as u64);
        out.push(CoreDelta {
            core,
            x: px.len() as u64,
            y: py.len() as u64,
            z,
            xy,
            total: db.core_total(core),
            rows: db.core_rows(core) as u64,
        });
    }
    out
}

/// Gain split into its data part and the model-cost change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gain {
    /// Reduction of `L(I|M)`.
    pub data: f64,
    /// Increase of `L(M)`.
    pub model_delta: f64,
}

impl Gain {
    pub fn net(&self) -> f64 {
        self.data - self.model_delta
    }

    pub fn value(&self, mode: GainMode) -> f64 {
        match mode {
            GainMode::Net => self.net(),
            GainMode::DataOnly => self.data,
        }
    }
}

/// Evaluates both parts of the gain for merging `x` and `y`.
pub fn evaluate(db: &InvertedDatabase, model: &Model, x: LeafsetId, y: LeafsetId) -> Gain {
    let deltas = core_deltas(db, x, y);
    if deltas.is_empty() {
        return Gain::default();
    }
    let (lx, ly) = (db.leafset(x), db.leafset(y));
    let merged_bits = model.st.set_bits(lx.union(ly).values());
    let (x_bits, y_bits) = (model.st.set_bits(lx.values()), model.st.set_bits(ly.values()));

    let mut gain = Gain::default();
    for d in &deltas {
        gain.data += d.data_gain();
        let mut model_delta = d.leaf_code_delta();
        let pointer = model.ct_c.bits(d.core);
        if d.x == d.xy {
            model_delta -= x_bits + pointer;
        }
        if d.y == d.xy {
            model_delta -= y_bits + pointer;
        }
        if d.z == 0 {
            model_delta += merged_bits + pointer;
        }
        gain.model_delta += model_delta;
    }
    gain
}

/// Reduction of the data length, `P₁ − P₂`.
pub fn data_gain(db: &InvertedDatabase, x: LeafsetId, y: LeafsetId) -> f64 {
    core_deltas(db, x, y).iter().map(CoreDelta::data_gain).sum()
}

/// Data gain minus the increase in model cost.
pub fn net_gain(db: &InvertedDatabase, model: &Model, x: LeafsetId, y: LeafsetId) -> f64 {
    evaluate(db, model, x, y).net()
}
