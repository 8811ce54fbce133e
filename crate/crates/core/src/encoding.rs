//! Description-length accounting: the standard code table, the coreset and
//! leafset code tables, and conditional-entropy data lengths.
//!
//! All lengths are fractional bits (log base 2) and `0·log 0` is taken as 0.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{AttrId, AttributedGraph, CoreId, MappingTable};
use crate::inverted::{InvertedDatabase, Leafset, LeafsetId};

/// `n·log₂ n` with `0·log 0 = 0`.
#[inline]
pub fn xlog2x(n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        let n = n as f64;
        n * n.log2()
    }
}

/// Shannon code lengths of attribute values from their global incidence
/// counts.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardCodeTable {
    lengths: Vec<Option<f64>>,
    counts: Vec<u64>,
}

impl StandardCodeTable {
    pub fn build(graph: &AttributedGraph) -> Result<Self> {
        Self::from_counts(graph.attr_counts())
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyAttributeUniverse);
        }
        let lengths = counts
            .iter()
            .map(|&c| (c > 0).then(|| -((c as f64) / (total as f64)).log2().min(0.0)))
            .collect();
        Ok(StandardCodeTable { lengths, counts })
    }

    /// Code length of `a`, `None` for values that never occur.
    pub fn get(&self, a: AttrId) -> Option<f64> {
        self.lengths.get(a.index()).copied().flatten()
    }

    pub fn bits(&self, a: AttrId) -> f64 {
        self.get(a).unwrap_or(0.0)
    }

    pub fn count(&self, a: AttrId) -> u64 {
        self.counts.get(a.index()).copied().unwrap_or(0)
    }

    /// Cost of spelling out a set of values with this table.
    pub fn set_bits(&self, values: &[AttrId]) -> f64 {
        values.iter().map(|a| self.bits(*a)).sum()
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }
}

/// Coreset codes. With single-valued coresets this is the standard table;
/// otherwise codes come from mapping-table usages.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreCodeTable {
    codes: Vec<Option<f64>>,
    row_costs: Vec<f64>,
}

impl CoreCodeTable {
    pub fn build(st: &StandardCodeTable, mapping: &MappingTable) -> Self {
        let codes: Vec<Option<f64>> = if mapping.is_single_valued() {
            mapping.iter().map(|(_, c, _)| st.get(c.values()[0])).collect()
        } else {
            let total: u64 = mapping.iter().map(|(_, _, p)| p.len() as u64).sum();
            mapping
                .iter()
                .map(|(_, _, p)| {
                    let usage = p.len() as u64;
                    (usage > 0).then(|| -((usage as f64) / (total as f64)).log2().min(0.0))
                })
                .collect()
        };
        let row_costs = mapping
            .iter()
            .zip(&codes)
            .map(|((_, c, _), code)| match code {
                Some(code) => st.set_bits(c.values()) + code,
                None => 0.0,
            })
            .collect();
        CoreCodeTable { codes, row_costs }
    }

    /// `Code_c` of a coreset, `None` if it never occurs.
    pub fn code(&self, core: CoreId) -> Option<f64> {
        self.codes[core.index()]
    }

    pub fn bits(&self, core: CoreId) -> f64 {
        self.code(core).unwrap_or(0.0)
    }

    /// Total cost `L(CT_c|I)`: each row spells its values in the standard
    /// table and carries its own code.
    pub fn length(&self) -> f64 {
        self.row_costs.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// `−log₂(f_L / f_c)`.
pub fn leaf_code_length(f_l: u64, f_c: u64) -> Result<f64> {
    if f_l == 0 || f_l > f_c {
        return Err(Error::Invariant(format!("leaf code needs 1 <= f_L <= f_c, got f_L={f_l}, f_c={f_c}")));
    }
    Ok((f_c as f64).log2() - (f_l as f64).log2())
}

/// Conditional code length of every live line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LeafCodeTable {
    rows: BTreeMap<(CoreId, LeafsetId), f64>,
}

impl LeafCodeTable {
    pub fn build(db: &InvertedDatabase) -> Result<Self> {
        let mut table = LeafCodeTable::default();
        for core in (0..db.core_count() as u32).map(CoreId) {
            table.fill_core(db, core)?;
        }
        Ok(table)
    }

    fn fill_core(&mut self, db: &InvertedDatabase, core: CoreId) -> Result<()> {
        let f_c = db.core_total(core);
        for rec in db.column(core) {
            self.rows.insert((core, rec.leafset), leaf_code_length(rec.frequency(), f_c)?);
        }
        Ok(())
    }

    /// Recomputes every row of the given coresets from the database.
    pub fn refresh(&mut self, db: &InvertedDatabase, cores: &[CoreId]) -> Result<()> {
        for &core in cores {
            let stale: Vec<_> = self.rows.range((core, LeafsetId(0))..=(core, LeafsetId(u32::MAX))).map(|(k, _)| *k).collect();
            for key in stale {
                self.rows.remove(&key);
            }
            self.fill_core(db, core)?;
        }
        Ok(())
    }

    pub fn code(&self, core: CoreId, leafset: LeafsetId) -> Option<f64> {
        self.rows.get(&(core, leafset)).copied()
    }

    pub fn rows(&self) -> impl Iterator<Item = (CoreId, LeafsetId, f64)> + '_ {
        self.rows.iter().map(|(&(c, l), &bits)| (c, l, bits))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// The compressing pattern set: standard table plus the two code tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub st: StandardCodeTable,
    pub ct_c: CoreCodeTable,
    pub ct_l: LeafCodeTable,
}

impl Model {
    pub fn build(graph: &AttributedGraph, mapping: &MappingTable, db: &InvertedDatabase) -> Result<Self> {
        let st = StandardCodeTable::build(graph)?;
        let ct_c = CoreCodeTable::build(&st, mapping);
        let ct_l = LeafCodeTable::build(db)?;
        Ok(Model { st, ct_c, ct_l })
    }

    /// Cost of one leafset-table row without its conditional code: the
    /// leafset spelled in the standard table plus the coreset pointer.
    pub fn row_overhead(&self, core: CoreId, leafset: &Leafset) -> f64 {
        self.st.set_bits(leafset.values()) + self.ct_c.bits(core)
    }

    /// Total code length of the a-star on line (core, leafset): `Code_c + Code_L`.
    pub fn pattern_bits(&self, core: CoreId, leafset: LeafsetId) -> Option<f64> {
        Some(self.ct_c.code(core)? + self.ct_l.code(core, leafset)?)
    }
}

/// `L(I|M) = Σ_j c_j log c_j − Σ_ij l_ij log l_ij`.
pub fn data_length(db: &InvertedDatabase) -> f64 {
    let mut bits = 0.0;
    for core in (0..db.core_count() as u32).map(CoreId) {
        bits += xlog2x(db.core_total(core));
        for rec in db.column(core) {
            bits -= xlog2x(rec.frequency());
        }
    }
    bits
}

/// `H(Y|X) = L(I|M) / s`.
pub fn conditional_entropy(db: &InvertedDatabase) -> Result<f64> {
    let s = db.total_frequency();
    if s == 0 {
        return Err(Error::EmptyDatabase);
    }
    Ok(data_length(db) / s as f64)
}

/// `L(M) = L(CT_c|I) + L(CT_L|I)`.
pub fn model_length(model: &Model, db: &InvertedDatabase) -> f64 {
    let mut bits = model.ct_c.length();
    for (core, leafset, code_l) in model.ct_l.rows() {
        bits += model.row_overhead(core, db.leafset(leafset)) + code_l;
    }
    bits
}

pub fn total_length(model: &Model, db: &InvertedDatabase) -> f64 {
    model_length(model, db) + data_length(db)
}

/// Per-iteration description-length summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthReport {
    pub bits_model: f64,
    pub bits_data: f64,
    pub bits_total: f64,
    pub records: usize,
    pub s: u64,
}

impl LengthReport {
    pub fn measure(model: &Model, db: &InvertedDatabase) -> Self {
        let bits_model = model_length(model, db);
        let bits_data = data_length(db);
        LengthReport {
            bits_model,
            bits_data,
            bits_total: bits_model + bits_data,
            records: db.record_count(),
            s: db.total_frequency(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::running_example;
    use crate::graph::{build_mapping_table, load_graph, singleton_coresets};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn standard_table_cases() {
        let st = StandardCodeTable::from_counts(vec![5]).unwrap();
        assert_eq!(st.bits(AttrId(0)), 0.0);

        let st = StandardCodeTable::from_counts(vec![3, 3, 3, 3]).unwrap();
        for a in 0..4 {
            assert!(close(st.bits(AttrId(a)), 2.0));
        }

        // -log2(2/4) = 1, -log2(1/4) = 2
        let st = StandardCodeTable::from_counts(vec![2, 1, 1]).unwrap();
        assert!(close(st.bits(AttrId(0)), 1.0));
        assert!(close(st.bits(AttrId(1)), 2.0));
        assert!(close(st.bits(AttrId(2)), 2.0));

        assert!(matches!(StandardCodeTable::from_counts(vec![0, 0]), Err(Error::EmptyAttributeUniverse)));
    }

    #[test]
    fn empty_universe_from_graph() {
        let (g, _) = load_graph("u\tv\n".as_bytes(), "".as_bytes()).unwrap();
        assert!(matches!(StandardCodeTable::build(&g), Err(Error::EmptyAttributeUniverse)));
    }

    #[test]
    fn leaf_code_cases() {
        assert_eq!(leaf_code_length(5, 5).unwrap(), 0.0);
        assert!(close(leaf_code_length(1, 2).unwrap(), 1.0));
        assert!(close(leaf_code_length(1, 8).unwrap(), 3.0));
        assert!(leaf_code_length(0, 3).is_err());
        assert!(leaf_code_length(4, 3).is_err());
    }

    #[test]
    fn xlogx_zero() {
        assert_eq!(xlog2x(0), 0.0);
        assert_eq!(xlog2x(1), 0.0);
        assert!(close(xlog2x(4), 8.0));
    }

    fn setup(edges: &str, attrs: &str) -> (InvertedDatabase, Model) {
        let (g, _) = load_graph(edges.as_bytes(), attrs.as_bytes()).unwrap();
        let mapping = build_mapping_table(&g, &singleton_coresets(&g));
        let db = InvertedDatabase::build(&g, &mapping);
        let model = Model::build(&g, &mapping, &db).unwrap();
        (db, model)
    }

    #[test]
    fn deterministic_db_has_zero_data_bits() {
        // every core value sees exactly one leaf value
        let (db, _) = setup("u\tv\nw\tz\n", "u\tx\nv\ty\nw\tx\nz\ty\n");
        assert_eq!(data_length(&db), 0.0);
        assert_eq!(conditional_entropy(&db).unwrap(), 0.0);
    }

    #[test]
    fn fair_binary_choice() {
        // core x at u sees y and z once each: 2 log 2 - 0 = 2 bits, H = 1
        let (db, _) = setup("u\tv\nu\tw\n", "u\tx\nv\ty\nw\tz\n");
        let x = db.core_id(&crate::graph::Coreset::single(AttrId(0))).unwrap();
        assert_eq!(db.core_rows(x), 2);
        let only_x: f64 = xlog2x(db.core_total(x)) - db.column(x).map(|r| xlog2x(r.frequency())).sum::<f64>();
        assert!(close(only_x, 2.0));
    }

    #[test]
    fn running_example_lengths() {
        let g = running_example();
        let mapping = build_mapping_table(&g, &singleton_coresets(&g));
        let db = InvertedDatabase::build(&g, &mapping);
        let model = Model::build(&g, &mapping, &db).unwrap();
        // core a: 6 log 6 - 3·2, core b: 4 log 4 - 2, core c: 3 log 3 - 2
        let expect = xlog2x(6) - 6.0 + 8.0 - 2.0 + xlog2x(3) - 2.0;
        assert!(close(data_length(&db), expect));
        let s = db.total_frequency();
        assert_eq!(s, 13);
        assert!(close(conditional_entropy(&db).unwrap() * s as f64, data_length(&db)));
        assert!(model_length(&model, &db) > model.ct_c.length());
    }

    #[test]
    fn model_without_rows_is_core_table() {
        let (g, _) = load_graph("".as_bytes(), "u\tx\nv\ty\n".as_bytes()).unwrap();
        let mapping = build_mapping_table(&g, &singleton_coresets(&g));
        let db = InvertedDatabase::build(&g, &mapping);
        let model = Model::build(&g, &mapping, &db).unwrap();
        assert!(model.ct_l.is_empty());
        assert!(close(model_length(&model, &db), model.ct_c.length()));
        // two values, one bit each, spelled once plus their own code
        assert!(close(model.ct_c.length(), 4.0));
    }
}
