//! Candidate pairs ordered by gain, and the related-leafset dictionary.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use ordered_float::OrderedFloat;

use crate::inverted::{InvertedDatabase, Leafset, LeafsetId};

/// A leafset pair with positive gain. `x` precedes `y` by leafset value.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: LeafsetId,
    pub y: LeafsetId,
    pub gain: f64,
    pub stamp: u64,
}

/// Orders two leafset ids by their values.
pub fn canonical(db: &InvertedDatabase, a: LeafsetId, b: LeafsetId) -> (LeafsetId, LeafsetId) {
    if db.leafset(a) <= db.leafset(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Pop order: larger gain first, then the lexicographically smaller pair.
pub fn pop_order(db: &InvertedDatabase, a: &Candidate, b: &Candidate) -> Ordering {
    b.gain
        .total_cmp(&a.gain)
        .then_with(|| (db.leafset(a.x), db.leafset(a.y)).cmp(&(db.leafset(b.x), db.leafset(b.y))))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    gain: OrderedFloat<f64>,
    key: Reverse<(Leafset, Leafset)>,
    x: LeafsetId,
    y: LeafsetId,
    stamp: u64,
}

/// Max-heap of candidates with lazy invalidation: superseded or removed
/// entries stay in the heap until popped and are skipped by stamp.
#[derive(Debug, Clone, Default)]
pub struct CandidateStore {
    heap: BinaryHeap<Entry>,
    live: HashMap<(LeafsetId, LeafsetId), (f64, u64)>,
    next_stamp: u64,
}

impl CandidateStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the pair `(x, y)`, which must be canonical.
    pub fn upsert(&mut self, db: &InvertedDatabase, x: LeafsetId, y: LeafsetId, gain: f64) {
        self.next_stamp += 1;
        let stamp = self.next_stamp;
        self.live.insert((x, y), (gain, stamp));
        self.heap.push(Entry {
            gain: OrderedFloat(gain),
            key: Reverse((db.leafset(x).clone(), db.leafset(y).clone())),
            x,
            y,
            stamp,
        });
    }

    pub fn remove(&mut self, x: LeafsetId, y: LeafsetId) -> bool {
        self.live.remove(&(x, y)).is_some()
    }

    pub fn get(&self, x: LeafsetId, y: LeafsetId) -> Option<f64> {
        self.live.get(&(x, y)).map(|(g, _)| *g)
    }

    fn is_current(&self, e: &Entry) -> bool {
        self.live.get(&(e.x, e.y)).is_some_and(|(_, s)| *s == e.stamp)
    }

    /// Removes and returns the best current candidate.
    pub fn pop(&mut self) -> Option<Candidate> {
        while let Some(e) = self.heap.pop() {
            if self.is_current(&e) {
                self.live.remove(&(e.x, e.y));
                return Some(Candidate { x: e.x, y: e.y, gain: e.gain.0, stamp: e.stamp });
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Current candidates in pop order.
    pub fn to_sorted_vec(&self, db: &InvertedDatabase) -> Vec<Candidate> {
        let mut out: Vec<Candidate> = self
            .live
            .iter()
            .map(|(&(x, y), &(gain, stamp))| Candidate { x, y, gain, stamp })
            .collect();
        out.sort_by(|a, b| pop_order(db, a, b));
        out
    }

    /// Drops heap entries that no longer match a live candidate.
    pub fn compact(&mut self) {
        if self.heap.len() > 4 * self.live.len() + 64 {
            let heap = std::mem::take(&mut self.heap);
            self.heap = heap.into_iter().filter(|e| self.is_current(e)).collect();
        }
    }
}

/// Symmetric map from a leafset to the leafsets it currently has a positive
/// gain with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelatedDict {
    map: HashMap<LeafsetId, BTreeSet<LeafsetId>>,
}

impl RelatedDict {
    pub fn insert(&mut self, a: LeafsetId, b: LeafsetId) {
        self.map.entry(a).or_default().insert(b);
        self.map.entry(b).or_default().insert(a);
    }

    pub fn remove_pair(&mut self, a: LeafsetId, b: LeafsetId) {
        for (k, v) in [(a, b), (b, a)] {
            if let Some(set) = self.map.get_mut(&k) {
                set.remove(&v);
                if set.is_empty() {
                    self.map.remove(&k);
                }
            }
        }
    }

    /// Removes every pair involving `a` and returns its former partners.
    pub fn remove_leafset(&mut self, a: LeafsetId) -> BTreeSet<LeafsetId> {
        let partners = self.map.remove(&a).unwrap_or_default();
        for p in &partners {
            if let Some(set) = self.map.get_mut(p) {
                set.remove(&a);
                if set.is_empty() {
                    self.map.remove(p);
                }
            }
        }
        partners
    }

    pub fn related(&self, a: LeafsetId) -> Option<&BTreeSet<LeafsetId>> {
        self.map.get(&a)
    }

    pub fn contains(&self, a: LeafsetId, b: LeafsetId) -> bool {
        self.map.get(&a).is_some_and(|s| s.contains(&b))
    }

    /// Number of leafsets with at least one related partner.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.map.iter().all(|(a, set)| set.iter().all(|b| self.contains(*b, *a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::running_example;
    use crate::graph::{build_mapping_table, singleton_coresets};

    #[test]
    fn pop_prefers_gain_then_pair_order() {
        let g = running_example();
        let db = InvertedDatabase::build(&g, &build_mapping_table(&g, &singleton_coresets(&g)));
        let ids = db.live_leafsets();
        let (a, b, c) = (ids[0], ids[1], ids[2]);
        let mut store = CandidateStore::new();
        store.upsert(&db, b, c, 2.0);
        store.upsert(&db, a, c, 2.0);
        store.upsert(&db, a, b, 1.0);
        store.upsert(&db, a, b, 3.0);
        assert_eq!(store.len(), 3);
        let order: Vec<_> = std::iter::from_fn(|| store.pop()).map(|c| (c.x, c.y, c.gain)).collect();
        assert_eq!(order, vec![(a, b, 3.0), (a, c, 2.0), (b, c, 2.0)]);
    }

    #[test]
    fn removed_entries_are_skipped() {
        let g = running_example();
        let db = InvertedDatabase::build(&g, &build_mapping_table(&g, &singleton_coresets(&g)));
        let ids = db.live_leafsets();
        let mut store = CandidateStore::new();
        store.upsert(&db, ids[0], ids[1], 5.0);
        store.upsert(&db, ids[1], ids[2], 1.0);
        assert!(store.remove(ids[0], ids[1]));
        assert_eq!(store.pop().map(|c| c.gain), Some(1.0));
        assert!(store.pop().is_none());
    }

    #[test]
    fn related_dict_symmetry() {
        let mut r = RelatedDict::default();
        let (a, b, c) = (LeafsetId(0), LeafsetId(1), LeafsetId(2));
        r.insert(a, b);
        r.insert(a, c);
        assert!(r.is_symmetric());
        assert!(r.contains(b, a));
        let partners = r.remove_leafset(a);
        assert_eq!(partners.into_iter().collect::<Vec<_>>(), vec![b, c]);
        assert!(r.is_empty());
        r.insert(b, c);
        r.remove_pair(c, b);
        assert!(r.is_empty());
    }
}
