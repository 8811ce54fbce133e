//! The three-column inverted database (leafset, coreset, positions) on which
//! merging and covering happen.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttrId, AttributedGraph, CoreId, Coreset, MappingTable, VertexId};

/// Sorted, duplicate-free, non-empty set of leaf values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Leafset(Vec<AttrId>);

impl Leafset {
    pub fn new(values: impl IntoIterator<Item = AttrId>) -> Option<Self> {
        let mut values: Vec<AttrId> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        (!values.is_empty()).then_some(Leafset(values))
    }

    pub fn single(value: AttrId) -> Self {
        Leafset(vec![value])
    }

    pub fn values(&self) -> &[AttrId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Leafset) -> Leafset {
        let mut values = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    values.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    values.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    values.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        values.extend_from_slice(&self.0[i..]);
        values.extend_from_slice(&other.0[j..]);
        Leafset(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LeafsetId(pub u32);

impl LeafsetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Borrowed view of one database line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvertedRecord<'a> {
    pub core: CoreId,
    pub leafset: LeafsetId,
    pub positions: &'a [VertexId],
}

impl InvertedRecord<'_> {
    /// Line frequency `f_L`.
    pub fn frequency(&self) -> u64 {
        self.positions.len() as u64
    }
}

/// How the position lists of a merged pair relate at one coreset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeCase {
    /// No common positions; nothing moves.
    Disjoint,
    /// Both lines keep some positions of their own.
    PartlyMerged,
    /// Both lines are absorbed into the merged line.
    BothTotallyMerged,
    /// The first line is absorbed, the second survives.
    FirstTotallyMerged,
    /// The second line is absorbed, the first survives.
    SecondTotallyMerged,
}

impl MergeCase {
    pub fn classify(x: u64, y: u64, xy: u64) -> MergeCase {
        debug_assert!(xy <= x && xy <= y);
        match (xy == 0, xy == x, xy == y) {
            (true, _, _) => MergeCase::Disjoint,
            (false, true, true) => MergeCase::BothTotallyMerged,
            (false, true, false) => MergeCase::FirstTotallyMerged,
            (false, false, true) => MergeCase::SecondTotallyMerged,
            (false, false, false) => MergeCase::PartlyMerged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoreMerge {
    pub core: CoreId,
    pub case: MergeCase,
    /// Number of positions moved into the merged line (`xy_e`).
    pub moved: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub x: LeafsetId,
    pub y: LeafsetId,
    /// Id of `x ∪ y`; `None` when nothing moved.
    pub merged: Option<LeafsetId>,
    /// Only coresets where positions moved, in ascending id order.
    pub cores: Vec<CoreMerge>,
    /// Input leafsets that no longer have a record anywhere.
    pub total: Vec<LeafsetId>,
    /// Input leafsets still alive after losing positions somewhere.
    pub part: Vec<LeafsetId>,
}

impl MergeReport {
    pub fn is_noop(&self) -> bool {
        self.cores.is_empty()
    }
}

/// The inverted database plus its indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedDatabase {
    coresets: Vec<Coreset>,
    leafsets: Vec<Leafset>,
    leafset_index: HashMap<Leafset, LeafsetId>,
    columns: Vec<BTreeMap<LeafsetId, Vec<VertexId>>>,
    core_totals: Vec<u64>,
    by_leafset: Vec<BTreeSet<CoreId>>,
}

/// Sorted-list intersection.
pub fn intersect(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn intersect_count(a: &[VertexId], b: &[VertexId]) -> u64 {
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

fn difference(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(a.len());
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}

fn union(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl InvertedDatabase {
    /// One line per (coreset, leaf value) with the core positions at which
    /// some neighbour carries that value. Empty lines are omitted.
    pub fn build(graph: &AttributedGraph, mapping: &MappingTable) -> Self {
        let mut db = InvertedDatabase {
            coresets: mapping.ids().map(|id| mapping.coreset(id).clone()).collect(),
            leafsets: Vec::new(),
            leafset_index: HashMap::new(),
            columns: vec![BTreeMap::new(); mapping.len()],
            core_totals: vec![0; mapping.len()],
            by_leafset: Vec::new(),
        };
        // Intern singleton leafsets in attribute id order so ids are stable.
        let mut seen_leaf = vec![false; graph.attr_count()];
        for v in graph.vertices() {
            for &a in graph.attributes(v) {
                seen_leaf[a.index()] = true;
            }
        }
        for (a, seen) in seen_leaf.iter().enumerate() {
            if *seen {
                db.intern(Leafset::single(AttrId(a as u32)));
            }
        }

        for (core, _, positions) in mapping.iter() {
            let column = &mut db.columns[core.index()];
            for &p in positions {
                for leaf in graph.neighbor_attributes(p) {
                    let id = db.leafset_index[&Leafset::single(leaf)];
                    column.entry(id).or_default().push(p);
                }
            }
            let total: u64 = column.values().map(|pos| pos.len() as u64).sum();
            db.core_totals[core.index()] = total;
            let leafs: Vec<LeafsetId> = column.keys().copied().collect();
            for leaf in leafs {
                db.by_leafset[leaf.index()].insert(core);
            }
        }
        db
    }

    fn intern(&mut self, leafset: Leafset) -> LeafsetId {
        if let Some(&id) = self.leafset_index.get(&leafset) {
            return id;
        }
        let id = LeafsetId(self.leafsets.len() as u32);
        self.leafset_index.insert(leafset.clone(), id);
        self.leafsets.push(leafset);
        self.by_leafset.push(BTreeSet::new());
        id
    }

    pub fn core_count(&self) -> usize {
        self.coresets.len()
    }

    pub fn coreset(&self, core: CoreId) -> &Coreset {
        &self.coresets[core.index()]
    }

    pub fn leafset(&self, id: LeafsetId) -> &Leafset {
        &self.leafsets[id.index()]
    }

    pub fn leafset_id(&self, leafset: &Leafset) -> Option<LeafsetId> {
        self.leafset_index.get(leafset).copied()
    }

    pub fn core_id(&self, coreset: &Coreset) -> Option<CoreId> {
        self.coresets.iter().position(|c| c == coreset).map(|i| CoreId(i as u32))
    }

    /// Running column total `c_e = Σ f_L` over the lines of `core`.
    pub fn core_total(&self, core: CoreId) -> u64 {
        self.core_totals[core.index()]
    }

    /// Number of live lines at `core`.
    pub fn core_rows(&self, core: CoreId) -> usize {
        self.columns[core.index()].len()
    }

    /// Total frequency `s` over all lines.
    pub fn total_frequency(&self) -> u64 {
        self.core_totals.iter().sum()
    }

    pub fn record_count(&self) -> usize {
        self.columns.iter().map(BTreeMap::len).sum()
    }

    pub fn positions(&self, core: CoreId, leafset: LeafsetId) -> Option<&[VertexId]> {
        self.columns[core.index()].get(&leafset).map(Vec::as_slice)
    }

    /// Lines at one coreset, ordered by leafset id.
    pub fn column(&self, core: CoreId) -> impl Iterator<Item = InvertedRecord<'_>> {
        self.columns[core.index()].iter().map(move |(leaf, pos)| InvertedRecord {
            core,
            leafset: *leaf,
            positions: pos,
        })
    }

    /// All lines, ordered by (coreset id, leafset id).
    pub fn records(&self) -> impl Iterator<Item = InvertedRecord<'_>> {
        (0..self.columns.len() as u32).flat_map(move |c| self.column(CoreId(c)))
    }

    /// Coresets at which `leafset` has a line.
    pub fn cores_of(&self, leafset: LeafsetId) -> &BTreeSet<CoreId> {
        &self.by_leafset[leafset.index()]
    }

    pub fn is_live(&self, leafset: LeafsetId) -> bool {
        !self.by_leafset[leafset.index()].is_empty()
    }

    /// Leafsets that still have at least one line, ordered by value.
    pub fn live_leafsets(&self) -> Vec<LeafsetId> {
        let mut ids: Vec<LeafsetId> = (0..self.leafsets.len() as u32)
            .map(LeafsetId)
            .filter(|id| self.is_live(*id))
            .collect();
        ids.sort_by(|a, b| self.leafset(*a).cmp(self.leafset(*b)));
        ids
    }

    /// Coresets adjacent to both leafsets, ascending.
    pub fn shared_cores(&self, x: LeafsetId, y: LeafsetId) -> Vec<CoreId> {
        self.cores_of(x).intersection(self.cores_of(y)).copied().collect()
    }

    /// Positions at `core` where both leafsets occur. Missing lines give an
    /// empty result.
    pub fn cooccurrence(&self, core: CoreId, x: LeafsetId, y: LeafsetId) -> Vec<VertexId> {
        match (self.positions(core, x), self.positions(core, y)) {
            (Some(a), Some(b)) => intersect(a, b),
            _ => Vec::new(),
        }
    }

    /// Value-keyed variant of [`cooccurrence`](Self::cooccurrence).
    pub fn cooccurrence_by_value(&self, coreset: &Coreset, x: &Leafset, y: &Leafset) -> Vec<VertexId> {
        match (self.core_id(coreset), self.leafset_id(x), self.leafset_id(y)) {
            (Some(c), Some(x), Some(y)) => self.cooccurrence(c, x, y),
            _ => Vec::new(),
        }
    }

    /// Moves every co-occurring position of `x` and `y` into the line
    /// `x ∪ y`, at each shared coreset.
    pub fn apply_merge(&mut self, x: LeafsetId, y: LeafsetId) -> MergeReport {
        let shared = self.shared_cores(x, y);
        let mut moves = Vec::new();
        for &core in &shared {
            let common = self.cooccurrence(core, x, y);
            if !common.is_empty() {
                moves.push((core, common));
            }
        }
        let mut report = MergeReport {
            x,
            y,
            merged: None,
            cores: Vec::new(),
            total: Vec::new(),
            part: Vec::new(),
        };
        if moves.is_empty() {
            return report;
        }

        let merged = self.intern(self.leafset(x).union(self.leafset(y)));
        report.merged = Some(merged);
        for (core, common) in moves {
            let xy = common.len() as u64;
            let column = &mut self.columns[core.index()];
            let fx = column[&x].len() as u64;
            let fy = column[&y].len() as u64;
            report.cores.push(CoreMerge { core, case: MergeCase::classify(fx, fy, xy), moved: xy });

            for leaf in [x, y] {
                let remaining = difference(&column[&leaf], &common);
                if remaining.is_empty() {
                    column.remove(&leaf);
                    self.by_leafset[leaf.index()].remove(&core);
                } else {
                    column.insert(leaf, remaining);
                }
            }
            let target = column.entry(merged).or_default();
            *target = union(target, &common);
            self.by_leafset[merged.index()].insert(core);
            self.core_totals[core.index()] -= xy;
        }

        for leaf in [x, y] {
            if self.is_live(leaf) {
                report.part.push(leaf);
            } else {
                report.total.push(leaf);
            }
        }
        report.part.retain(|l| *l != merged);
        report.total.retain(|l| *l != merged);
        report
    }

    /// (position, coreset, leaf value) facts covered by the live lines.
    pub fn facts(&self) -> Vec<(VertexId, CoreId, AttrId)> {
        let mut out = Vec::new();
        for rec in self.records() {
            for &p in rec.positions {
                for &l in self.leafset(rec.leafset).values() {
                    out.push((p, rec.core, l));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Verifies index and total bookkeeping against the lines themselves.
    pub fn check_consistency(&self) -> Result<()> {
        for (c, column) in self.columns.iter().enumerate() {
            let sum: u64 = column.values().map(|p| p.len() as u64).sum();
            if sum != self.core_totals[c] {
                return Err(Error::Invariant(format!(
                    "core {c}: running total {} != column sum {sum}",
                    self.core_totals[c]
                )));
            }
            for (leaf, pos) in column {
                if pos.is_empty() {
                    return Err(Error::Invariant(format!("core {c}: empty line {leaf:?}")));
                }
                if pos.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invariant(format!("core {c}: unsorted positions")));
                }
                if !self.by_leafset[leaf.index()].contains(&CoreId(c as u32)) {
                    return Err(Error::Invariant(format!("leafset index missing core {c}")));
                }
            }
        }
        for (l, cores) in self.by_leafset.iter().enumerate() {
            for core in cores {
                if !self.columns[core.index()].contains_key(&LeafsetId(l as u32)) {
                    return Err(Error::Invariant(format!("stale leafset index entry {l}")));
                }
            }
        }
        Ok(())
    }

    /// JSON Lines dump sorted by (core labels, leaf labels).
    pub fn dump_jsonl<W: Write>(&self, graph: &AttributedGraph, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            core: Vec<&'a str>,
            leaves: Vec<&'a str>,
            positions: Vec<&'a str>,
        }
        let mut lines: Vec<Line<'_>> = self
            .records()
            .map(|rec| Line {
                core: self.coreset(rec.core).values().iter().map(|a| graph.attr_label(*a)).collect(),
                leaves: self.leafset(rec.leafset).values().iter().map(|a| graph.attr_label(*a)).collect(),
                positions: rec.positions.iter().map(|v| graph.vertex_label(*v)).collect(),
            })
            .collect();
        lines.sort_by(|a, b| (&a.core, &a.leaves).cmp(&(&b.core, &b.leaves)));
        for line in lines {
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n").map_err(|e| Error::io("<dump>", e))?;
        }
        Ok(())
    }
}
