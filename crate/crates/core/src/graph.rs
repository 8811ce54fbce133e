//! Attributed graph model: ingestion, symbol interning and the coreset
//! mapping table.
//!
//! Vertex and attribute labels are interned in first-appearance order, so a
//! fixed input byte stream always produces the same ids.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl AttrId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// String to dense id bijection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    labels: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A sorted, duplicate-free, non-empty set of attribute values found on a
/// star's core vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coreset(Vec<AttrId>);

impl Coreset {
    pub fn new(values: impl IntoIterator<Item = AttrId>) -> Option<Self> {
        let mut values: Vec<AttrId> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        (!values.is_empty()).then_some(Coreset(values))
    }

    pub fn single(value: AttrId) -> Self {
        Coreset(vec![value])
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
}

/// Counters reported while loading a graph. None of these abort the load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadSummary {
    pub self_loops: usize,
    pub duplicate_edges: usize,
    pub isolated_vertices_added: usize,
}

/// Undirected simple graph with a set of attribute values on each vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedGraph {
    vertices: Interner,
    attrs: Interner,
    adjacency: Vec<Vec<VertexId>>,
    lambda: Vec<Vec<AttrId>>,
    edge_count: usize,
}

impl AttributedGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of distinct attribute values.
    pub fn attr_count(&self) -> usize {
        self.attrs.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn attributes(&self, v: VertexId) -> &[AttrId] {
        &self.lambda[v.index()]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (0..self.adjacency.len() as u32).map(VertexId)
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        self.vertices.label(v.0)
    }

    pub fn attr_label(&self, a: AttrId) -> &str {
        self.attrs.label(a.0)
    }

    pub fn vertex_id(&self, label: &str) -> Option<VertexId> {
        self.vertices.get(label).map(VertexId)
    }

    pub fn attr_id(&self, label: &str) -> Option<AttrId> {
        self.attrs.get(label).map(AttrId)
    }

    pub fn attr_labels(&self) -> &[String] {
        self.attrs.labels()
    }

    /// Attribute ids ordered by their label, lexicographically. This is the
    /// column order used for externally supplied score vectors, and since ids
    /// are assigned in label order it is simply `0..attr_count`.
    pub fn attrs_by_label(&self) -> Vec<AttrId> {
        (0..self.attrs.len() as u32).map(AttrId).collect()
    }

    /// Union of the attribute values carried by the neighbours of `v`.
    pub fn neighbor_attributes(&self, v: VertexId) -> Vec<AttrId> {
        let mut out: Vec<AttrId> = self
            .neighbors(v)
            .iter()
            .flat_map(|u| self.attributes(*u).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of (vertex, value) incidences per attribute value.
    pub fn attr_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.attrs.len()];
        for values in &self.lambda {
            for a in values {
                counts[a.index()] += 1;
            }
        }
        counts
    }

    /// Copy of this graph with the attribute sets of `hidden` vertices
    /// cleared. Interning is unchanged.
    pub fn with_hidden_attributes(&self, hidden: &[VertexId]) -> AttributedGraph {
        let mut g = self.clone();
        for v in hidden {
            g.lambda[v.index()].clear();
        }
        g
    }

    /// Serialize to the two-file text format (edges, attributes).
    pub fn write_edges<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for u in self.vertices() {
            for &v in self.neighbors(u) {
                if u < v {
                    writeln!(out, "{}\t{}", self.vertex_label(u), self.vertex_label(v))?;
                }
            }
        }
        Ok(())
    }

    pub fn write_attrs<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in self.vertices() {
            let values: Vec<&str> = self.attributes(v).iter().map(|a| self.attr_label(*a)).collect();
            writeln!(out, "{}\t{}", self.vertex_label(v), values.join(","))?;
        }
        Ok(())
    }
}

/// Incremental constructor. Vertex ids follow first appearance; attribute
/// ids are renumbered in lexicographic label order by [`GraphBuilder::build`],
/// so ids handed out before then are provisional.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Interner,
    attrs: Interner,
    adjacency: Vec<Vec<VertexId>>,
    lambda: Vec<Vec<AttrId>>,
    summary: LoadSummary,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, label: &str) -> VertexId {
        let id = self.vertices.intern(label);
        if id as usize == self.adjacency.len() {
            self.adjacency.push(Vec::new());
            self.lambda.push(Vec::new());
        }
        VertexId(id)
    }

    pub fn attr(&mut self, label: &str) -> AttrId {
        AttrId(self.attrs.intern(label))
    }

    /// Adds an undirected edge. Returns `false` for self-loops, which are
    /// rejected and counted.
    pub fn edge(&mut self, u: &str, v: &str) -> bool {
        if u == v {
            self.summary.self_loops += 1;
            return false;
        }
        let u = self.vertex(u);
        let v = self.vertex(v);
        self.adjacency[u.index()].push(v);
        self.adjacency[v.index()].push(u);
        true
    }

    pub fn attributes<'a>(&mut self, v: &str, values: impl IntoIterator<Item = &'a str>) -> VertexId {
        let v = self.vertex(v);
        for value in values {
            let a = self.attr(value);
            self.lambda[v.index()].push(a);
        }
        v
    }

    pub fn build(self) -> (AttributedGraph, LoadSummary) {
        let GraphBuilder { vertices, attrs, mut adjacency, mut lambda, mut summary } = self;
        let mut half_edges = 0usize;
        for list in adjacency.iter_mut() {
            let before = list.len();
            list.sort_unstable();
            list.dedup();
            summary.duplicate_edges += before - list.len();
            half_edges += list.len();
        }
        // each duplicate undirected edge was counted once per endpoint
        summary.duplicate_edges /= 2;
        let mut order: Vec<u32> = (0..attrs.len() as u32).collect();
        order.sort_by(|a, b| attrs.label(*a).cmp(attrs.label(*b)));
        let mut remap = vec![0u32; order.len()];
        let mut sorted = Interner::default();
        for old in order {
            remap[old as usize] = sorted.intern(attrs.label(old));
        }
        let attrs = sorted;
        for values in lambda.iter_mut() {
            for a in values.iter_mut() {
                *a = AttrId(remap[a.index()]);
            }
            values.sort_unstable();
            values.dedup();
        }
        let graph = AttributedGraph {
            vertices,
            attrs,
            adjacency,
            lambda,
            edge_count: half_edges / 2,
        };
        (graph, summary)
    }
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, line)| (i + 1, line))
}

fn strip(line: &str) -> Option<&str> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        None
    } else {
        Some(line)
    }
}

/// Reads an edge stream (`u<TAB>v`) and an attribute stream
/// (`v<TAB>a1,a2,...`). Lines starting with `#` are comments.
pub fn load_graph<E: BufRead, A: BufRead>(edges: E, attrs: A) -> Result<(AttributedGraph, LoadSummary)> {
    let mut builder = GraphBuilder::new();

    // attribute lines first, so a written graph reloads with the same ids
    for (lineno, line) in content_lines(attrs) {
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let Some(line) = strip(&line) else { continue };
        let mut parts = line.splitn(2, '\t');
        let v = parts.next().unwrap_or_default().trim();
        if v.is_empty() {
            return Err(Error::parse(lineno, "empty vertex label"));
        }
        let values = parts.next().unwrap_or_default();
        if values.contains('\t') {
            return Err(Error::parse(lineno, "attribute values may not contain a tab"));
        }
        let values = values.split(',').map(str::trim).filter(|s| !s.is_empty());
        builder.attributes(v, values);
    }
    for (lineno, line) in content_lines(edges) {
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let Some(line) = strip(&line) else { continue };
        let mut parts = line.split('\t');
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(lineno, format!("expected `u<TAB>v`, got {line:?}")));
        };
        let (u, v) = (u.trim(), v.trim());
        if u.is_empty() || v.is_empty() {
            return Err(Error::parse(lineno, "empty vertex label"));
        }
        builder.edge(u, v);
    }

    let (graph, mut summary) = builder.build();
    summary.isolated_vertices_added = graph.vertices().filter(|v| graph.neighbors(*v).is_empty()).count();
    if summary.self_loops > 0 {
        log::warn!("rejected {} self-loop edge(s)", summary.self_loops);
    }
    Ok((graph, summary))
}

/// Parses a coreset file: one coreset per line, comma separated values.
/// Coresets naming a value the graph never uses are dropped with a warning
/// and counted in the second return value.
pub fn load_coresets<R: BufRead>(reader: R, graph: &AttributedGraph) -> Result<(Vec<Coreset>, usize)> {
    let mut out = Vec::new();
    let mut unknown = 0;
    for (lineno, line) in content_lines(reader) {
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let Some(line) = strip(&line) else { continue };
        let ids: Option<Vec<AttrId>> = line
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| graph.attr_id(s))
            .collect();
        match ids.and_then(Coreset::new) {
            Some(c) => out.push(c),
            None => {
                log::warn!("coreset file line {lineno}: unknown attribute value in {line:?}");
                unknown += 1;
            }
        }
    }
    Ok((out, unknown))
}

/// One singleton coreset per distinct attribute value, in id order.
pub fn singleton_coresets(graph: &AttributedGraph) -> Vec<Coreset> {
    (0..graph.attr_count() as u32).map(|a| Coreset::single(AttrId(a))).collect()
}

/// Index into a [`MappingTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoreId(pub u32);

impl CoreId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Coreset to position-list map: every vertex whose attribute set contains
/// the coreset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    coresets: Vec<Coreset>,
    positions: Vec<Vec<VertexId>>,
    index: HashMap<Coreset, CoreId>,
}

impl MappingTable {
    pub fn len(&self) -> usize {
        self.coresets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coresets.is_empty()
    }

    pub fn coreset(&self, id: CoreId) -> &Coreset {
        &self.coresets[id.index()]
    }

    pub fn positions(&self, id: CoreId) -> &[VertexId] {
        &self.positions[id.index()]
    }

    pub fn get(&self, coreset: &Coreset) -> Option<CoreId> {
        self.index.get(coreset).copied()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = CoreId> {
        (0..self.coresets.len() as u32).map(CoreId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CoreId, &Coreset, &[VertexId])> {
        self.ids().map(move |id| (id, self.coreset(id), self.positions(id)))
    }

    /// Coresets whose position list is empty.
    pub fn empty_coresets(&self) -> usize {
        self.positions.iter().filter(|p| p.is_empty()).count()
    }

    /// True if every coreset has exactly one value.
    pub fn is_single_valued(&self) -> bool {
        self.coresets.iter().all(|c| c.len() == 1)
    }
}

pub fn build_mapping_table(graph: &AttributedGraph, coresets: &[Coreset]) -> MappingTable {
    let mut table = MappingTable {
        coresets: Vec::with_capacity(coresets.len()),
        positions: Vec::with_capacity(coresets.len()),
        index: HashMap::with_capacity(coresets.len()),
    };
    for coreset in coresets {
        if table.index.contains_key(coreset) {
            continue;
        }
        let positions: Vec<VertexId> = graph
            .vertices()
            .filter(|v| is_subset(coreset.values(), graph.attributes(*v)))
            .collect();
        let id = CoreId(table.coresets.len() as u32);
        table.index.insert(coreset.clone(), id);
        table.coresets.push(coreset.clone());
        table.positions.push(positions);
    }
    if table.empty_coresets() > 0 {
        log::warn!("{} coreset(s) have no positions", table.empty_coresets());
    }
    table
}

/// Subset test on two sorted slices.
pub(crate) fn is_subset<T: Ord>(small: &[T], large: &[T]) -> bool {
    let mut it = large.iter();
    'outer: for x in small {
        for y in it.by_ref() {
            match y.cmp(x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Connected components by breadth-first search, each sorted, ordered by
/// smallest member.
pub fn connected_components(graph: &AttributedGraph) -> Vec<Vec<VertexId>> {
    let n = graph.vertex_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in graph.vertices() {
        if seen[start.index()] {
            continue;
        }
        seen[start.index()] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &u in graph.neighbors(v) {
                if !seen[u.index()] {
                    seen[u.index()] = true;
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}
