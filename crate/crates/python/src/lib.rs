//! Python bindings for the `dhsom` crate.

use dhsom::{DissimilarityKind, SomConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: dhsom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind(code: &str) -> PyResult<DissimilarityKind> {
    code.parse().map_err(py_err)
}

/// A histogram with uniform density inside each bin.
#[pyclass(name = "Histogram", module = "dhsom", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyHistogram {
    inner: dhsom::Histogram,
}

#[pymethods]
impl PyHistogram {
    /// `bins` is a list of `(lower, upper, weight)` triples.
    #[new]
    fn new(bins: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let bins = bins.into_iter().map(|(l, u, w)| dhsom::Bin::new(l, u, w)).collect();
        dhsom::Histogram::new(bins).map(|inner| Self { inner }).map_err(py_err)
    }

    /// Equi-depth histogram of raw samples.
    #[staticmethod]
    #[pyo3(signature = (samples, bins = 10))]
    fn from_samples(samples: Vec<f64>, bins: usize) -> PyResult<Self> {
        dhsom::build_equidepth(&samples, bins).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn bins(&self) -> Vec<(f64, f64, f64)> {
        self.inner.bins().iter().map(|b| (b.lower, b.upper, b.weight)).collect()
    }

    #[getter]
    fn cut_points(&self) -> Vec<f64> {
        self.inner.cut_points()
    }

    fn quantile(&self, s: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(PyValueError::new_err("quantile level must lie in [0, 1]"));
        }
        Ok(self.inner.to_quantile_profile().quantile(s))
    }

    fn mean(&self) -> f64 {
        self.inner.to_quantile_profile().mean()
    }

    fn std(&self) -> f64 {
        self.inner.to_quantile_profile().std_dev()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Histogram({} bins, mean={:.4})", self.inner.len(), self.mean())
    }
}

/// A vector of histograms, one per variable.
#[pyclass(name = "Observation", module = "dhsom", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyObservation {
    inner: dhsom::ObservationVector,
}

#[pymethods]
impl PyObservation {
    #[new]
    fn new(histograms: Vec<PyRef<'_, PyHistogram>>) -> PyResult<Self> {
        let hs = histograms.iter().map(|h| h.inner.clone()).collect();
        dhsom::ObservationVector::new(hs).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn histograms(&self) -> Vec<PyHistogram> {
        self.inner.histograms().iter().map(|h| PyHistogram { inner: h.clone() }).collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("Observation(dim={})", self.inner.dim())
    }
}

fn unwrap_all(xs: &[PyRef<'_, PyObservation>]) -> Vec<dhsom::ObservationVector> {
    xs.iter().map(|x| x.inner.clone()).collect()
}

/// Squared L2 Wasserstein distance summed over variables.
#[pyfunction]
fn wasserstein_sq(a: &PyObservation, b: &PyObservation) -> PyResult<f64> {
    dhsom::wasserstein_sq(&a.inner, &b.inner).map_err(py_err)
}

/// Any of the dissimilarities by code: dW, dC, dR, dM, dS, dI1, dI2.
#[pyfunction]
fn dissimilarity(code: &str, a: &PyObservation, b: &PyObservation) -> PyResult<f64> {
    kind(code)?.compute(&a.inner, &b.inner).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (observations, weights = None))]
fn barycenter(observations: Vec<PyRef<'_, PyObservation>>, weights: Option<Vec<f64>>) -> PyResult<PyObservation> {
    let xs = unwrap_all(&observations);
    let w = weights.unwrap_or_else(|| vec![1.0; xs.len()]);
    dhsom::barycenter(&xs, &w).map(|inner| PyObservation { inner }).map_err(py_err)
}

#[pyfunction]
fn total_inertia(observations: Vec<PyRef<'_, PyObservation>>) -> PyResult<f64> {
    dhsom::total_inertia(&unwrap_all(&observations)).map_err(py_err)
}

/// Benchmark dataset `db` (1 to 6). Returns `(observations, labels)`.
#[pyfunction]
#[pyo3(signature = (db, seed = 0, n_per_cluster = None))]
fn generate(db: u8, seed: u64, n_per_cluster: Option<usize>) -> PyResult<(Vec<PyObservation>, Vec<usize>)> {
    let mut spec = dhsom::DatasetSpec::preset(db, seed).map_err(py_err)?;
    if let Some(n) = n_per_cluster {
        spec.n_per_cluster = n;
    }
    let data = dhsom::generate(&spec).map_err(py_err)?;
    let obs = data.observations.into_iter().map(|inner| PyObservation { inner }).collect();
    Ok((obs, data.labels))
}

/// Outcome of training, enriching and clustering a map.
#[pyclass(name = "ClusterRun", module = "dhsom", frozen, get_all)]
pub struct PyClusterRun {
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
    neuron_labels: Vec<Option<usize>>,
    n_clusters: usize,
    bmus: Vec<usize>,
    densities: Vec<f64>,
    bandwidth: f64,
    connectivity: Vec<(usize, usize, u64)>,
    prototypes: Vec<PyObservation>,
}

#[pymethods]
impl PyClusterRun {
    fn __repr__(&self) -> String {
        format!(
            "ClusterRun({}x{} map, {} clusters, {} observations)",
            self.rows,
            self.cols,
            self.n_clusters,
            self.labels.len()
        )
    }
}

/// Trains a map on `observations` and clusters its prototypes. Defaults
/// follow the dataset size, as in the command line tool.
#[pyfunction]
#[pyo3(signature = (
    observations, *, rows = None, cols = None, t_max = None, lambda_i = None,
    lambda_f = None, sigma = None, dissimilarity = "dW", seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn cluster(
    observations: Vec<PyRef<'_, PyObservation>>,
    rows: Option<usize>,
    cols: Option<usize>,
    t_max: Option<usize>,
    lambda_i: Option<f64>,
    lambda_f: Option<f64>,
    sigma: Option<f64>,
    dissimilarity: &str,
    seed: u64,
) -> PyResult<PyClusterRun> {
    let data = unwrap_all(&observations);
    let mut cfg = SomConfig::default_for(data.len(), kind(dissimilarity)?, seed);
    if rows.is_some() || cols.is_some() {
        let topo = dhsom::GridTopology::new(
            rows.unwrap_or(cfg.topology.rows()),
            cols.unwrap_or(cfg.topology.cols()),
        )
        .map_err(py_err)?;
        cfg.topology = topo;
        cfg.lambda_initial = dhsom::som::half_diagonal(&topo);
    }
    if let Some(t) = t_max {
        cfg.t_max = t;
    }
    if let Some(l) = lambda_i {
        cfg.lambda_initial = l;
    }
    if let Some(l) = lambda_f {
        cfg.lambda_final = l;
    }
    cfg.validate().map_err(py_err)?;
    let out = dhsom::pipeline::run(&data, &cfg, sigma).map_err(py_err)?;
    let e = &out.enriched;
    Ok(PyClusterRun {
        rows: cfg.topology.rows(),
        cols: cfg.topology.cols(),
        labels: out.clusters.data_label.clone(),
        neuron_labels: out.clusters.neuron_label.clone(),
        n_clusters: out.clusters.n_clusters,
        bmus: e.map.bmu_of().to_vec(),
        densities: e.densities.clone(),
        bandwidth: e.bandwidth,
        connectivity: e.connectivity.pairs().collect(),
        prototypes: e.map.prototypes().iter().map(|p| PyObservation { inner: p.clone() }).collect(),
    })
}

#[pyfunction]
fn adjusted_rand(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    dhsom::adjusted_rand(&pred, &truth).map_err(py_err)
}

#[pyfunction]
fn nmi(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    dhsom::nmi(&pred, &truth).map_err(py_err)
}

#[pyfunction]
fn v_measure(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    dhsom::v_measure(&pred, &truth).map_err(py_err)
}

/// `{"ari": .., "nmi": .., "v_measure": ..}`.
#[pyfunction]
fn score<'py>(py: Python<'py>, pred: Vec<usize>, truth: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    let s = dhsom::score(&pred, &truth).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("ari", s.ari)?;
    d.set_item("nmi", s.nmi)?;
    d.set_item("v_measure", s.v_measure)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "dhsom")]
fn dhsom_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyObservation>()?;
    m.add_class::<PyClusterRun>()?;
    m.add_function(wrap_pyfunction!(wasserstein_sq, m)?)?;
    m.add_function(wrap_pyfunction!(dissimilarity, m)?)?;
    m.add_function(wrap_pyfunction!(barycenter, m)?)?;
    m.add_function(wrap_pyfunction!(total_inertia, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(v_measure, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    Ok(())
}
