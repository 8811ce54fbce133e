use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyKeyError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use astarmine::miner::pattern::write_patterns_jsonl;
use astarmine::rules::label_pairs;
use astarmine::scoring::ScoreVector;
use astarmine::{Algorithm, AttributedGraph, Coreset, Error, GainMode, Miner, MinerConfig, MiningResult};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: AttributedGraph,
}

#[pymethods]
impl PyGraph {
    /// Loads the two-file text format.
    #[staticmethod]
    fn load(edges: &str, attrs: &str) -> PyResult<Self> {
        let (inner, _) = astarmine::load_graph(open(edges)?, open(attrs)?).map_err(to_py)?;
        Ok(PyGraph { inner })
    }

    /// Same as `load`, from in-memory text.
    #[staticmethod]
    fn from_text(edges: &str, attrs: &str) -> PyResult<Self> {
        let (inner, _) = astarmine::load_graph(edges.as_bytes(), attrs.as_bytes()).map_err(to_py)?;
        Ok(PyGraph { inner })
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// Attribute values in lexicographic order.
    #[getter]
    fn attribute_values(&self) -> Vec<String> {
        self.inner.attr_labels().to_vec()
    }

    fn neighbors(&self, vertex: &str) -> PyResult<Vec<String>> {
        let v = self.vertex(vertex)?;
        Ok(self.inner.neighbors(v).iter().map(|u| self.inner.vertex_label(*u).to_owned()).collect())
    }

    fn attributes(&self, vertex: &str) -> PyResult<Vec<String>> {
        let v = self.vertex(vertex)?;
        Ok(self.inner.attributes(v).iter().map(|a| self.inner.attr_label(*a).to_owned()).collect())
    }
}

impl PyGraph {
    fn vertex(&self, label: &str) -> PyResult<astarmine::VertexId> {
        self.inner.vertex_id(label).ok_or_else(|| PyKeyError::new_err(label.to_owned()))
    }
}

#[pyclass(name = "Pattern", frozen, get_all)]
struct PyPattern {
    rank: usize,
    core: Vec<String>,
    leaves: Vec<String>,
    code_bits: f64,
    frequency: u64,
}

#[pymethods]
impl PyPattern {
    fn __repr__(&self) -> String {
        format!(
            "Pattern(rank={}, core={:?}, leaves={:?}, code_bits={:.4}, frequency={})",
            self.rank, self.core, self.leaves, self.code_bits, self.frequency
        )
    }
}

/// Result of a mining run, tied to the graph it was mined from.
#[pyclass(name = "Mined", frozen)]
struct PyMined {
    result: MiningResult,
    graph: Py<PyGraph>,
}

#[pymethods]
impl PyMined {
    #[getter]
    fn merges(&self) -> usize {
        self.result.stats.merges()
    }

    /// Total description length after each iteration.
    #[getter]
    fn total_bits(&self) -> Vec<f64> {
        self.result.stats.iterations.iter().map(|it| it.lengths.bits_total).collect()
    }

    fn patterns(&self, py: Python<'_>) -> Vec<PyPattern> {
        let g = &self.graph.borrow(py).inner;
        let labels = |v: &[astarmine::AttrId]| v.iter().map(|a| g.attr_label(*a).to_owned()).collect();
        self.result
            .patterns
            .iter()
            .map(|p| PyPattern {
                rank: p.rank,
                core: labels(p.coreset.values()),
                leaves: labels(p.leafset.values()),
                code_bits: p.code_bits,
                frequency: p.frequency,
            })
            .collect()
    }

    fn write_patterns(&self, py: Python<'_>, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        write_patterns_jsonl(&self.result.patterns, &self.graph.borrow(py).inner, std::io::BufWriter::new(file))
            .map_err(to_py)
    }

    /// Ranked `(value, score)` candidates for a vertex's missing attributes.
    fn score_node(&self, py: Python<'_>, vertex: &str) -> PyResult<Vec<(String, f64)>> {
        let graph = self.graph.borrow(py);
        let v = graph.vertex(vertex)?;
        let g = &graph.inner;
        let scores = astarmine::score_node(&self.result.patterns, g, v);
        Ok(scores.ranked().into_iter().map(|(a, s)| (g.attr_label(a).to_owned(), s)).collect())
    }

    /// Raw per-value scores in lexicographic value order; `-inf` marks
    /// unsupported values.
    fn score_vector(&self, py: Python<'_>, vertex: &str) -> PyResult<Vec<f64>> {
        let graph = self.graph.borrow(py);
        let v = graph.vertex(vertex)?;
        Ok(astarmine::score_node(&self.result.patterns, &graph.inner, v).0)
    }

    /// `(cause, derivative, code_bits, rank)` pair rules.
    fn split_to_pairs(&self, py: Python<'_>) -> Vec<(String, String, f64, usize)> {
        let g = &self.graph.borrow(py).inner;
        let rules = astarmine::split_to_pairs(&self.result.patterns);
        label_pairs(&rules, g)
            .into_iter()
            .zip(&rules)
            .map(|((c, d), r)| (c, d, r.score, r.rank))
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (graph, algo = "partial", gain = "net", coresets = None))]
fn mine(
    py: Python<'_>,
    graph: Py<PyGraph>,
    algo: &str,
    gain: &str,
    coresets: Option<Vec<Vec<String>>>,
) -> PyResult<PyMined> {
    let algorithm = match algo {
        "basic" => Algorithm::Basic,
        "partial" => Algorithm::Partial,
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    };
    let gain = match gain {
        "net" => GainMode::Net,
        "data-only" => GainMode::DataOnly,
        other => return Err(PyValueError::new_err(format!("unknown gain mode {other:?}"))),
    };
    let result = {
        let g = &graph.borrow(py).inner;
        let cores = coresets
            .map(|sets| {
                sets.iter()
                    .map(|set| {
                        let ids = set
                            .iter()
                            .map(|l| g.attr_id(l).ok_or_else(|| PyKeyError::new_err(l.clone())))
                            .collect::<PyResult<Vec<_>>>()?;
                        Coreset::new(ids).ok_or_else(|| PyValueError::new_err("empty coreset"))
                    })
                    .collect::<PyResult<Vec<_>>>()
            })
            .transpose()?;
        let config = MinerConfig { algorithm, gain };
        let miner = Miner::new(g, cores.as_deref(), config).map_err(to_py)?;
        py.detach(|| miner.run()).map_err(to_py)?
    };
    Ok(PyMined { result, graph })
}

/// Min-max normalizes both vectors and multiplies them element-wise.
#[pyfunction]
fn fuse_scores(model: Vec<f64>, external: Vec<f64>) -> PyResult<Vec<f64>> {
    astarmine::fuse_scores(&ScoreVector(model), &external).map_err(to_py)
}

#[pyfunction]
fn similarity_weight(py: Python<'_>, graph: Py<PyGraph>, leaves: Vec<String>, neighbor_values: Vec<String>) -> PyResult<f64> {
    let g = &graph.borrow(py).inner;
    let ids = |v: &[String]| -> PyResult<Vec<astarmine::AttrId>> {
        let mut out = v
            .iter()
            .map(|l| g.attr_id(l).ok_or_else(|| PyKeyError::new_err(l.clone())))
            .collect::<PyResult<Vec<_>>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    };
    Ok(astarmine::similarity_weight(&ids(&leaves)?, &ids(&neighbor_values)?))
}

#[pyfunction]
fn recall_at_k(ranking: Vec<String>, truth: Vec<String>, k: usize) -> Option<f64> {
    astarmine::recall_at_k(&ranking, &truth, k)
}

#[pyfunction]
fn ndcg_at_k(ranking: Vec<String>, truth: Vec<String>, k: usize) -> Option<f64> {
    astarmine::ndcg_at_k(&ranking, &truth, k)
}

#[pyfunction]
fn coverage_ratio(valid: Vec<(String, String)>, found: Vec<(String, String)>, k: usize) -> PyResult<f64> {
    astarmine::coverage_ratio(&astarmine::RuleLibrary::new(valid), &found, k).map_err(to_py)
}

#[pymodule]
fn astarmine_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPattern>()?;
    m.add_class::<PyMined>()?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_scores, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_weight, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_ratio, m)?)?;
    Ok(())
}
