//! Python bindings. Points are lists of ints, segments are `(a, b)` tuples,
//! and reports come back as plain dicts.

use std::fs::File;

use enflo_core::embeddings::EmbeddingMap;
use enflo_core::graphgroup::{isometric_embedding_check, metric_agreement, Graph, PairSelection, SpanningTree};
use enflo_core::poincare::{self, double_simplex_gap as gap, EuclideanConfig, Evaluation};
use enflo_core::space::{self, Isometry, Point, Segment, SpaceSpec};
use enflo_core::Budget;
use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

type Coords = Vec<u64>;

fn err(e: enflo_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dict(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn evaluation(samples: Option<usize>, seed: u64) -> Evaluation {
    match samples {
        Some(samples) => Evaluation::Sampled { samples, seed },
        None => Evaluation::Exact,
    }
}

fn segment(spec: &SpaceSpec, (a, b): (Coords, Coords)) -> PyResult<Segment> {
    Segment::classify(spec, Point::dense(a), Point::dense(b)).map_err(err)
}

#[pyclass(name = "SpaceSpec", frozen, module = "enflo")]
struct PySpaceSpec {
    inner: SpaceSpec,
}

#[pymethods]
impl PySpaceSpec {
    #[new]
    #[pyo3(signature = (q, d, p, levels))]
    fn new(q: u64, d: usize, p: usize, levels: u32) -> PyResult<Self> {
        Ok(Self { inner: SpaceSpec::custom(q, d, p, levels).map_err(err)? })
    }

    /// q = 2^(n+1), d = 2n^n, p = n, L = n-1.
    #[staticmethod]
    fn standard(n: u64) -> PyResult<Self> {
        Ok(Self { inner: SpaceSpec::standard(n).map_err(err)? })
    }

    #[getter]
    fn q(&self) -> u64 {
        self.inner.q
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn levels(&self) -> u32 {
        self.inner.levels
    }

    fn support(&self, m: u32) -> PyResult<usize> {
        self.inner.check_level(m).map_err(err)?;
        Ok(self.inner.support(m))
    }

    fn step(&self, m: u32) -> PyResult<u64> {
        self.inner.check_level(m).map_err(err)?;
        Ok(self.inner.step(m))
    }

    fn point_count(&self) -> BigUint {
        self.inner.point_count_big()
    }

    fn group_order(&self) -> BigUint {
        self.inner.group_order()
    }

    fn segment_count(&self, m: u32) -> PyResult<BigUint> {
        space::count_segments_formula(&self.inner, m).map_err(err)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!("SpaceSpec(q={}, d={}, p={}, levels={})", s.q, s.d, s.p, s.levels)
    }
}

#[pyclass(name = "Isometry", frozen, module = "enflo")]
struct PyIsometry {
    inner: Isometry,
}

#[pymethods]
impl PyIsometry {
    fn apply(&self, point: Coords) -> PyResult<Coords> {
        Ok(self.inner.apply(&Point::dense(point)).map_err(err)?.to_vec())
    }

    /// `self ∘ inner`.
    fn compose(&self, inner: PyRef<'_, PyIsometry>) -> PyResult<PyIsometry> {
        Ok(PyIsometry { inner: self.inner.compose(&inner.inner).map_err(err)? })
    }

    fn inverse(&self) -> PyIsometry {
        PyIsometry { inner: self.inner.inverse() }
    }

    #[getter]
    fn perm(&self) -> Vec<usize> {
        self.inner.perm().to_vec()
    }

    /// `(flip, shift)` per coordinate.
    #[getter]
    fn maps(&self) -> Vec<(bool, u64)> {
        self.inner.coord_maps().iter().map(|c| (c.flip, c.shift)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Isometry(perm={:?}, maps={:?})", self.perm(), self.maps())
    }
}

#[pyclass(name = "Embedding", frozen, module = "enflo")]
struct PyEmbedding {
    inner: EmbeddingMap,
}

#[pymethods]
impl PyEmbedding {
    #[staticmethod]
    #[pyo3(signature = (scale = 1.0))]
    fn circle(scale: f64) -> Self {
        Self { inner: EmbeddingMap::circle(scale) }
    }

    #[staticmethod]
    fn coordinate() -> Self {
        Self { inner: EmbeddingMap::CoordinateLift }
    }

    #[staticmethod]
    fn random_linear(spec: PyRef<'_, PySpaceSpec>, dim: usize, seed: u64) -> Self {
        Self { inner: EmbeddingMap::random_linear(&spec.inner, dim, seed) }
    }

    #[staticmethod]
    fn random_table(spec: PyRef<'_, PySpaceSpec>, dim: usize, range: i64, seed: u64) -> PyResult<Self> {
        let inner = EmbeddingMap::random_integer_table(&spec.inner, dim, range, seed, &Budget::default()).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_csv(spec: PyRef<'_, PySpaceSpec>, path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Ok(Self { inner: EmbeddingMap::from_csv(&spec.inner, file).map_err(err)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    fn eval(&self, spec: PyRef<'_, PySpaceSpec>, point: Coords) -> PyResult<Vec<f64>> {
        self.inner.eval(&spec.inner, &Point::dense(point)).map_err(err)
    }
}

#[pyfunction]
fn distance(spec: PyRef<'_, PySpaceSpec>, a: Coords, b: Coords) -> PyResult<u64> {
    space::distance(&spec.inner, &Point::dense(a), &Point::dense(b)).map_err(err)
}

#[pyfunction]
fn segment_level(spec: PyRef<'_, PySpaceSpec>, a: Coords, b: Coords) -> PyResult<Option<u32>> {
    space::segment_level(&spec.inner, &Point::dense(a), &Point::dense(b)).map_err(err)
}

#[pyfunction]
fn canonical_segment(spec: PyRef<'_, PySpaceSpec>, m: u32) -> PyResult<(Coords, Coords)> {
    let s = space::canonical_segment(&spec.inner, m).map_err(err)?;
    Ok((s.a.to_vec(), s.b.to_vec()))
}

#[pyfunction]
fn random_segment(spec: PyRef<'_, PySpaceSpec>, m: u32, seed: u64) -> PyResult<(Coords, Coords)> {
    let s = space::random_segment(&spec.inner, m, seed).map_err(err)?;
    Ok((s.a.to_vec(), s.b.to_vec()))
}

#[pyfunction]
fn transitive_isometry(
    spec: PyRef<'_, PySpaceSpec>,
    s1: (Coords, Coords),
    s2: (Coords, Coords),
) -> PyResult<PyIsometry> {
    let (s1, s2) = (segment(&spec.inner, s1)?, segment(&spec.inner, s2)?);
    Ok(PyIsometry { inner: space::transitive_isometry(&spec.inner, &s1, &s2).map_err(err)? })
}

/// `(u, v)`: the two simplices of the level-`m` double simplex.
#[pyfunction]
fn double_simplex(spec: PyRef<'_, PySpaceSpec>, m: u32) -> PyResult<(Vec<Coords>, Vec<Coords>)> {
    let ds = space::double_simplex(&spec.inner, m).map_err(err)?;
    Ok((ds.u.iter().map(Point::to_vec).collect(), ds.v.iter().map(Point::to_vec).collect()))
}

#[pyfunction]
fn verify_double_simplex(py: Python<'_>, spec: PyRef<'_, PySpaceSpec>, m: u32) -> PyResult<Py<PyAny>> {
    let ds = space::double_simplex(&spec.inner, m).map_err(err)?;
    to_dict(py, &space::verify_double_simplex(&spec.inner, &ds))
}

/// `(sum_c, sum_s, gap, witness)` for integer points; `gap == witness`.
#[pyfunction]
fn double_simplex_gap(u: Vec<Vec<i64>>, v: Vec<Vec<i64>>) -> PyResult<(BigInt, BigInt, BigInt, BigInt)> {
    let lift = |xs: Vec<Vec<i64>>| -> Vec<Vec<BigInt>> { xs.into_iter().map(|x| x.into_iter().map(BigInt::from).collect()).collect() };
    let cfg = EuclideanConfig::new(lift(u), lift(v)).map_err(err)?;
    let g = gap(&cfg);
    Ok((g.sum_c, g.sum_s, g.gap, g.witness))
}

/// Exact when `samples` is None.
#[pyfunction]
#[pyo3(signature = (spec, embedding, samples = None, seed = 0))]
fn chain_check(
    py: Python<'_>,
    spec: PyRef<'_, PySpaceSpec>,
    embedding: PyRef<'_, PyEmbedding>,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let r = poincare::chain_check(&spec.inner, &embedding.inner, evaluation(samples, seed), &Budget::default()).map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, m, embedding, samples = None, seed = 0))]
fn orbit_check(
    py: Python<'_>,
    spec: PyRef<'_, PySpaceSpec>,
    m: u32,
    embedding: PyRef<'_, PyEmbedding>,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let r = poincare::orbit_average_check(&spec.inner, m, &embedding.inner, evaluation(samples, seed), &Budget::default())
        .map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, embedding, samples = None, seed = 0))]
fn certificate(
    py: Python<'_>,
    spec: PyRef<'_, PySpaceSpec>,
    embedding: PyRef<'_, PyEmbedding>,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let r = poincare::enflo_certificate(&spec.inner, &embedding.inner, evaluation(samples, seed), &Budget::default())
        .map_err(err)?;
    to_dict(py, &r)
}

/// BFS distance against the max metric on every pair of points.
#[pyfunction]
fn graph_metric_check(py: Python<'_>, spec: PyRef<'_, PySpaceSpec>) -> PyResult<Py<PyAny>> {
    to_dict(py, &metric_agreement(&spec.inner, &Budget::default()).map_err(err)?)
}

/// Word metric of the edge-loop group against the graph metric on sampled pairs.
#[pyfunction]
#[pyo3(signature = (spec, pairs = 200, seed = 0, word_budget = None))]
fn group_embedding_check(
    py: Python<'_>,
    spec: PyRef<'_, PySpaceSpec>,
    pairs: usize,
    seed: u64,
    word_budget: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let graph = Graph::unit_graph(&spec.inner, &Budget::default()).map_err(err)?;
    let tree = SpanningTree::bfs(&graph, 0).map_err(err)?;
    let budget = word_budget.unwrap_or(spec.inner.q as usize / 2 + 2);
    let selection = PairSelection::Sample { count: pairs, seed };
    to_dict(py, &isometric_embedding_check(&graph, &tree, budget, selection).map_err(err)?)
}

#[pymodule]
fn enflo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpaceSpec>()?;
    m.add_class::<PyIsometry>()?;
    m.add_class::<PyEmbedding>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(segment_level, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_segment, m)?)?;
    m.add_function(wrap_pyfunction!(random_segment, m)?)?;
    m.add_function(wrap_pyfunction!(transitive_isometry, m)?)?;
    m.add_function(wrap_pyfunction!(double_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(verify_double_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(double_simplex_gap, m)?)?;
    m.add_function(wrap_pyfunction!(chain_check, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_check, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(graph_metric_check, m)?)?;
    m.add_function(wrap_pyfunction!(group_embedding_check, m)?)?;
    Ok(())
}
