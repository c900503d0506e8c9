//! Python bindings: the cohesion cache, its query outcomes, batch cohesion,
//! clustering and the evaluation metrics.

use std::collections::BTreeMap;

use pald::tasks::{self, Method};
use pald::{
    cohesion_matrix_with, cohesion_network, natural_threshold, strong_components, DissimilarityMatrix,
    Metric, Options, PaldError, QueryPoint, Tolerance,
};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: PaldError) -> PyErr {
    match e {
        PaldError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_metric(metric: &str) -> PyResult<Metric> {
    metric.parse().map_err(PyValueError::new_err)
}

fn options(tolerance: f64, parallel: bool) -> PyResult<Options> {
    Ok(Options {
        tolerance: Tolerance::new(tolerance).map_err(to_py)?,
        parallel,
    })
}

/// Cohesion of a new point against the reference set.
#[pyclass(frozen, get_all, module = "pald_py")]
struct QueryOutcome {
    cohesion_to: Vec<f64>,
    cohesion_from: Vec<f64>,
    self_cohesion: f64,
    epsilon: f64,
    tau_updated: f64,
    strong_neighbors: Vec<usize>,
    is_outlier: bool,
}

impl From<pald::QueryOutcome> for QueryOutcome {
    fn from(o: pald::QueryOutcome) -> Self {
        QueryOutcome {
            cohesion_to: o.cohesion_to,
            cohesion_from: o.cohesion_from,
            self_cohesion: o.self_cohesion,
            epsilon: o.epsilon,
            tau_updated: o.tau_updated,
            strong_neighbors: o.strong_neighbors,
            is_outlier: o.is_outlier,
        }
    }
}

#[pymethods]
impl QueryOutcome {
    fn __repr__(&self) -> String {
        format!(
            "QueryOutcome(n={}, self_cohesion={}, epsilon={}, tau_updated={}, strong_neighbors={:?}, is_outlier={})",
            self.cohesion_to.len(),
            self.self_cohesion,
            self.epsilon,
            self.tau_updated,
            self.strong_neighbors,
            if self.is_outlier { "True" } else { "False" }
        )
    }
}

/// Precomputed focus sizes and threshold of a reference set.
#[pyclass(frozen, module = "pald_py")]
struct CohesionCache {
    inner: pald::CohesionCache,
}

#[pymethods]
impl CohesionCache {
    #[new]
    #[pyo3(signature = (points, metric = "euclidean", labels = None, tolerance = 0.0, parallel = true))]
    fn new(
        py: Python<'_>,
        points: Vec<Vec<f64>>,
        metric: &str,
        labels: Option<Vec<String>>,
        tolerance: f64,
        parallel: bool,
    ) -> PyResult<Self> {
        let (metric, opts) = (parse_metric(metric)?, options(tolerance, parallel)?);
        let inner = py
            .detach(|| pald::CohesionCache::from_points(points, metric, labels, &opts))
            .map_err(to_py)?;
        Ok(CohesionCache { inner })
    }

    /// Builds from a square dissimilarity matrix; queries then need distances.
    #[staticmethod]
    #[pyo3(signature = (matrix, labels = None, tolerance = 0.0))]
    fn from_distances(matrix: Vec<Vec<f64>>, labels: Option<Vec<String>>, tolerance: f64) -> PyResult<Self> {
        let d = DissimilarityMatrix::from_square(&matrix).map_err(to_py)?;
        let inner = pald::CohesionCache::build_with(d, labels, &options(tolerance, true)?).map_err(to_py)?;
        Ok(CohesionCache { inner })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = pald::CohesionCache::load(path).map_err(to_py)?;
        Ok(CohesionCache { inner })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau_ref()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<String>> {
        self.inner.labels().map(<[String]>::to_vec)
    }

    /// Pass exactly one of `point` (features) or `distances` (to every reference point).
    #[pyo3(signature = (point = None, distances = None))]
    fn query(&self, point: Option<Vec<f64>>, distances: Option<Vec<f64>>) -> PyResult<QueryOutcome> {
        let t = match (&point, &distances) {
            (Some(p), None) => QueryPoint::Point(p),
            (None, Some(d)) => QueryPoint::Distances(d),
            _ => return Err(PyValueError::new_err("pass exactly one of point or distances")),
        };
        self.inner.query(t).map(Into::into).map_err(to_py)
    }

    /// Full reference cohesion matrix from the cached focus sizes.
    fn lazy_network(&self, py: Python<'_>) -> Vec<Vec<f64>> {
        py.detach(|| self.inner.lazy_network().to_rows())
    }

    /// Larger is more anomalous.
    fn anomaly_score(&self, point: Vec<f64>) -> PyResult<f64> {
        tasks::anomaly_score(&self.inner, QueryPoint::Point(&point))
            .map(|s| s.rank_score)
            .map_err(to_py)
    }

    /// `(predicted, per-class scores, tie)` for a labelled cache.
    #[pyo3(signature = (point, method = "count_to"))]
    fn classify(&self, point: Vec<f64>, method: &str) -> PyResult<(String, BTreeMap<String, f64>, bool)> {
        let method: Method = method.parse().map_err(to_py)?;
        let s = tasks::classify(&self.inner, QueryPoint::Point(&point), method).map_err(to_py)?;
        Ok((s.predicted, s.per_class, s.tie))
    }

    fn __repr__(&self) -> String {
        format!("CohesionCache(n={}, tau={})", self.inner.n(), self.inner.tau_ref())
    }
}

/// Batch cohesion matrix and natural threshold.
#[pyfunction]
#[pyo3(signature = (points, metric = "euclidean", tolerance = 0.0))]
fn cohesion(py: Python<'_>, points: Vec<Vec<f64>>, metric: &str, tolerance: f64) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let (metric, opts) = (parse_metric(metric)?, options(tolerance, true)?);
    py.detach(|| {
        let d = DissimilarityMatrix::from_points(&points, metric)?;
        let c = cohesion_matrix_with(&d, &opts)?;
        Ok((c.to_rows(), natural_threshold(&c)))
    })
    .map_err(to_py)
}

/// Connected components of the strong links, ordered by smallest member.
#[pyfunction]
#[pyo3(signature = (points, metric = "euclidean", tolerance = 0.0))]
fn clusters(py: Python<'_>, points: Vec<Vec<f64>>, metric: &str, tolerance: f64) -> PyResult<Vec<Vec<usize>>> {
    let (metric, opts) = (parse_metric(metric)?, options(tolerance, true)?);
    py.detach(|| {
        let d = DissimilarityMatrix::from_points(&points, metric)?;
        let c = cohesion_matrix_with(&d, &opts)?;
        Ok(strong_components(&cohesion_network(&c)))
    })
    .map_err(to_py)
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, positive: Vec<bool>) -> PyResult<f64> {
    tasks::roc_auc(&scores, &positive).map_err(to_py)
}

#[pyfunction]
fn average_precision(scores: Vec<f64>, positive: Vec<bool>) -> PyResult<f64> {
    tasks::average_precision(&scores, &positive).map_err(to_py)
}

#[pymodule]
fn pald_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CohesionCache>()?;
    m.add_class::<QueryOutcome>()?;
    m.add_function(wrap_pyfunction!(cohesion, m)?)?;
    m.add_function(wrap_pyfunction!(clusters, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    Ok(())
}
