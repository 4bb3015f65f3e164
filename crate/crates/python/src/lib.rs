//! Python bindings.

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dynhdb_core::bubble_tree::{classify_quality as classify, Quality};
use dynhdb_core::harness::gen_gaussian_mixture as gen_mixture;
use dynhdb_core::{
    cluster_exact, cluster_summary, BubbleTreeConfig, Error, IndexConfig, Point, PointId, UpdateStats,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotFound(id) => PyKeyError::new_err(format!("point {id} not found")),
        e if e.is_internal() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn stats_dict<'py>(py: Python<'py>, s: &UpdateStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rknn", s.rknn)?;
    d.set_item("candidates", s.candidates)?;
    d.set_item("linked", s.linked)?;
    d.set_item("replacements", s.replacements)?;
    d.set_item("edges_removed", s.edges_removed)?;
    d.set_item("components", s.components)?;
    d.set_item("boruvka_rounds", s.boruvka_rounds)?;
    d.set_item("rebuilt", s.rebuilt)?;
    d.set_item("core_time_s", s.core_time.as_secs_f64())?;
    d.set_item("mst_time_s", s.mst_time.as_secs_f64())?;
    Ok(d)
}

/// Exact clustering state under single-point inserts and deletes.
#[pyclass(name = "DynamicClusterer")]
struct PyDynamicClusterer {
    inner: dynhdb_core::DynamicClusterer,
}

#[pymethods]
impl PyDynamicClusterer {
    #[new]
    #[pyo3(signature = (min_pts, min_fanout = 5, max_fanout = 10))]
    fn new(min_pts: usize, min_fanout: usize, max_fanout: usize) -> PyResult<Self> {
        let cfg = IndexConfig::new(min_pts, min_fanout, max_fanout).map_err(to_py)?;
        Ok(Self { inner: dynhdb_core::DynamicClusterer::with_config(cfg) })
    }

    fn insert<'py>(&mut self, py: Python<'py>, id: PointId, coords: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.insert_point(Point::new(id, coords)).map_err(to_py)?;
        stats_dict(py, &s)
    }

    fn delete<'py>(&mut self, py: Python<'py>, id: PointId) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.delete_point(id).map_err(to_py)?;
        stats_dict(py, &s)
    }

    /// Tree edges as (u, v, weight), ascending by weight.
    fn mst(&self) -> PyResult<Vec<(PointId, PointId, f64)>> {
        Ok(self.inner.mst_snapshot().map_err(to_py)?.into_iter().map(|e| (e.u, e.v, e.weight)).collect())
    }

    fn mst_weight(&self) -> Option<f64> {
        self.inner.mst_weight()
    }

    fn core_distance(&self, id: PointId) -> Option<f64> {
        self.inner.core_record(id).map(|r| r.core_distance)
    }

    /// (ids, labels) of the current flat clustering; -1 is noise.
    #[pyo3(signature = (min_cluster_size = None))]
    fn labels(&self, min_cluster_size: Option<u64>) -> PyResult<(Vec<PointId>, Vec<i64>)> {
        let mcs = min_cluster_size.unwrap_or(self.inner.min_pts() as u64);
        let res = cluster_exact(&self.inner, mcs).map_err(to_py)?;
        Ok((res.ids, res.labels))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Compressed summary tree of clustering features.
#[pyclass(name = "BubbleTree")]
struct PyBubbleTree {
    inner: dynhdb_core::BubbleTree,
}

#[pymethods]
impl PyBubbleTree {
    #[new]
    #[pyo3(signature = (rho, min_fanout = 3, max_fanout = 6))]
    fn new(rho: f64, min_fanout: usize, max_fanout: usize) -> PyResult<Self> {
        let cfg = BubbleTreeConfig::new(rho, min_fanout, max_fanout).map_err(to_py)?;
        Ok(Self { inner: dynhdb_core::BubbleTree::new(cfg) })
    }

    fn insert(&mut self, id: PointId, coords: Vec<f64>) -> PyResult<()> {
        self.inner.bt_insert(Point::new(id, coords)).map_err(to_py)?;
        Ok(())
    }

    fn delete(&mut self, id: PointId) -> PyResult<()> {
        self.inner.bt_delete(id).map_err(to_py)?;
        Ok(())
    }

    #[getter]
    fn leaf_count(&self) -> usize {
        self.inner.leaf_count()
    }

    #[getter]
    fn target_leaf_count(&self) -> usize {
        self.inner.target_leaf_count()
    }

    /// One (LS, SS, n, member ids) tuple per leaf.
    fn leaves(&self) -> Vec<(Vec<f64>, f64, u64, Vec<PointId>)> {
        self.inner.leaf_cfs().into_iter().map(|l| (l.cf.ls, l.cf.ss, l.cf.n, l.members)).collect()
    }

    /// (ids, labels) from clustering the leaf bubbles; -1 is noise.
    #[pyo3(signature = (min_pts, min_cluster_size = None))]
    fn labels(&self, min_pts: usize, min_cluster_size: Option<u64>) -> PyResult<(Vec<PointId>, Vec<i64>)> {
        let res = cluster_summary(&self.inner, min_pts, min_cluster_size.unwrap_or(min_pts as u64)).map_err(to_py)?;
        Ok((res.ids, res.labels))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Labels for `points` (row order) from a one-shot clustering.
#[pyfunction]
#[pyo3(signature = (points, min_pts, min_cluster_size = None))]
fn static_cluster(points: Vec<Vec<f64>>, min_pts: usize, min_cluster_size: Option<u64>) -> PyResult<Vec<i64>> {
    let pts: Vec<Point> = points
        .into_iter()
        .enumerate()
        .map(|(i, c)| Point::try_new(i as PointId, c))
        .collect::<dynhdb_core::Result<_>>()
        .map_err(to_py)?;
    let res = dynhdb_core::static_cluster(&pts, min_pts, min_cluster_size.unwrap_or(min_pts as u64)).map_err(to_py)?;
    Ok(res.labels)
}

#[pyfunction]
fn nmi(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    dynhdb_core::nmi(&a, &b).map_err(to_py)
}

/// (points, labels) of a seeded isotropic Gaussian mixture.
#[pyfunction]
#[pyo3(signature = (n, dim, components, overlap = 0.1, seed = 0))]
fn gen_gaussian_mixture(
    n: usize,
    dim: usize,
    components: usize,
    overlap: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<i64>)> {
    let (pts, labels) = gen_mixture(n, dim, components, overlap, seed).map_err(to_py)?;
    Ok((pts.into_iter().map(|p| p.coords).collect(), labels))
}

/// "good" / "under" / "over" per bubble weight.
#[pyfunction]
fn classify_quality(weights: Vec<u64>, total: u64, k: f64) -> PyResult<Vec<&'static str>> {
    Ok(classify(&weights, total, k)
        .map_err(to_py)?
        .into_iter()
        .map(|q| match q {
            Quality::Good => "good",
            Quality::Under => "under",
            Quality::Over => "over",
        })
        .collect())
}

#[pymodule]
fn dynhdb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDynamicClusterer>()?;
    m.add_class::<PyBubbleTree>()?;
    m.add_function(wrap_pyfunction!(static_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(gen_gaussian_mixture, m)?)?;
    m.add_function(wrap_pyfunction!(classify_quality, m)?)?;
    Ok(())
}
