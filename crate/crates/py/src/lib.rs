//! Python bindings for `layercache`.

use std::path::PathBuf;

use layercache::analysis::{mr_approximation, solve_characteristic_time, ApproxSolution, ClockMode, DEFAULT_TOL};
use layercache::experiment::{figure_preset, run_config as run_experiment, ExperimentConfig, PRESET_NAMES};
use layercache::policies::{hlfu_static_placement, static_optimal as solve_static, UnitKind, DEFAULT_TABLE_CAP};
use layercache::{build_policy, derive_seed, run_simulation, sample_trace, seeded_rng, CachePolicy, PolicyKind, Residency, SimOptions};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: layercache::Error) -> PyErr {
    match e {
        layercache::Error::Io(e) => PyIOError::new_err(e.to_string()),
        layercache::Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width.max(1)).map(<[f64]>::to_vec).collect()
}

/// Sizes and request rates of `D` objects with `V` versions each.
#[pyclass(name = "Catalog", module = "layercache_py", frozen)]
struct PyCatalog {
    inner: layercache::Catalog,
}

impl PyCatalog {
    fn check(&self, object: usize, version: usize) -> PyResult<()> {
        if object >= self.inner.num_objects() || version >= self.inner.num_versions() {
            return Err(PyIndexError::new_err(format!(
                "({object}, {version}) outside a {}x{} catalog",
                self.inner.num_objects(),
                self.inner.num_versions()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl PyCatalog {
    /// `layer_sizes[d][l]`, `rates[d][v]`, optional `mr_sizes[d][v]`.
    #[new]
    #[pyo3(signature = (layer_sizes, rates, mr_sizes=None))]
    fn new(layer_sizes: Vec<Vec<f64>>, rates: Vec<Vec<f64>>, mr_sizes: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let inner = layercache::Catalog::from_rows(&layer_sizes, mr_sizes.as_deref(), &rates).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: layercache::Catalog::from_json(text).map_err(to_py)?,
        })
    }

    /// Catalog of the first scenario of a preset.
    #[staticmethod]
    fn from_preset(name: &str) -> PyResult<Self> {
        let cfg = figure_preset(name).map_err(to_py)?;
        let scenario = cfg
            .scenarios
            .first()
            .ok_or_else(|| PyValueError::new_err(format!("preset `{name}` has no scenarios")))?;
        Ok(Self {
            inner: scenario.build_catalog(cfg.catalog_seed()).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn num_objects(&self) -> usize {
        self.inner.num_objects()
    }

    #[getter]
    fn num_versions(&self) -> usize {
        self.inner.num_versions()
    }

    #[getter]
    fn has_mr_sizes(&self) -> bool {
        self.inner.has_mr_sizes()
    }

    fn layer_size(&self, object: usize, layer: usize) -> PyResult<f64> {
        self.check(object, layer)?;
        Ok(self.inner.layer_size(object, layer))
    }

    /// Size of the first `version + 1` layers.
    fn lr_size(&self, object: usize, version: usize) -> PyResult<f64> {
        self.check(object, version)?;
        Ok(self.inner.lr_size(object, version))
    }

    fn mr_size(&self, object: usize, version: usize) -> PyResult<Option<f64>> {
        self.check(object, version)?;
        Ok(self.inner.mr_size(object, version))
    }

    fn rate(&self, object: usize, version: usize) -> PyResult<f64> {
        self.check(object, version)?;
        Ok(self.inner.rate(object, version))
    }

    fn total_size(&self) -> f64 {
        self.inner.total_lr_size()
    }

    /// `p(d,l)`, the probability a request touches each layer, as rows.
    fn layer_probs(&self) -> PyResult<Vec<Vec<f64>>> {
        let pop = self.inner.popularity().map_err(to_py)?;
        Ok(rows(pop.layer_probs(), self.inner.num_versions()))
    }

    fn version_probs(&self) -> PyResult<Vec<Vec<f64>>> {
        let pop = self.inner.popularity().map_err(to_py)?;
        Ok(rows(pop.version_probs(), self.inner.num_versions()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Catalog(objects={}, versions={}, total_size={})",
            self.inner.num_objects(),
            self.inner.num_versions(),
            self.inner.total_lr_size()
        )
    }
}

fn solution_dict<'py>(py: Python<'py>, sol: &ApproxSolution, hit_rate: f64) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("characteristic_time", sol.characteristic_time)?;
    d.set_item("hit_rate", hit_rate)?;
    d.set_item("hit_prob", rows(&sol.hit_prob, sol.num_versions))?;
    d.set_item("residual", sol.residual)?;
    Ok(d)
}

fn clock(name: &str) -> PyResult<ClockMode> {
    name.parse().map_err(to_py)
}

/// Working-set approximation for a layered cache of size `budget`.
#[pyfunction]
#[pyo3(signature = (catalog, budget, clock_mode="discrete", tol=DEFAULT_TOL))]
fn approx<'py>(py: Python<'py>, catalog: &PyCatalog, budget: f64, clock_mode: &str, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let pop = catalog.inner.popularity().map_err(to_py)?;
    let sol = solve_characteristic_time(&pop, &catalog.inner, budget, clock(clock_mode)?, tol).map_err(to_py)?;
    solution_dict(py, &sol, sol.hit_rate(&pop))
}

/// Same approximation with whole multi-representation versions as units.
#[pyfunction]
#[pyo3(signature = (catalog, budget, clock_mode="discrete", tol=DEFAULT_TOL))]
fn mr_approx<'py>(py: Python<'py>, catalog: &PyCatalog, budget: f64, clock_mode: &str, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let pop = catalog.inner.popularity().map_err(to_py)?;
    let sol = mr_approximation(&pop, &catalog.inner, budget, clock(clock_mode)?, tol).map_err(to_py)?;
    solution_dict(py, &sol, sol.hit_rate(&pop))
}

/// Simulates `policy` on a trace of `requests` draws seeded by `seed`.
#[pyfunction]
#[pyo3(signature = (catalog, policy, budget, requests, seed, warmup_fraction=0.0, resolution=1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    catalog: &PyCatalog,
    policy: &str,
    budget: f64,
    requests: usize,
    seed: u64,
    warmup_fraction: f64,
    resolution: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: PolicyKind = policy.parse().map_err(to_py)?;
    let cat = &catalog.inner;
    let report = py
        .detach(|| {
            let pop = cat.popularity()?;
            let trace = sample_trace(&pop, requests, false, &mut seeded_rng(seed))?;
            let options = SimOptions { resolution, warmup_fraction };
            run_simulation(kind, cat, budget, &trace, &options)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("policy", &report.policy)?;
    d.set_item("requests", report.total_requests())?;
    d.set_item("hits", report.total_hits())?;
    d.set_item("hit_rate", report.hit_rate())?;
    d.set_item("bytes_evicted", report.bytes_evicted)?;
    let (n, v) = (cat.num_objects(), cat.num_versions());
    let version: Vec<Vec<Option<f64>>> = (0..n).map(|o| (0..v).map(|x| report.version_hit_prob(o, x)).collect()).collect();
    d.set_item("version_hit_prob", version)?;
    // Only layered policies count per-layer touches.
    let layer: Vec<Vec<Option<f64>>> = (0..n).map(|o| (0..v).map(|l| report.layer_hit_prob(o, l)).collect()).collect();
    if layer.iter().flatten().any(Option::is_some) {
        d.set_item("layer_hit_prob", layer)?;
    }
    Ok(d)
}

/// Best static layered placement: `(prefix, value, hit_rate)`.
#[pyfunction]
#[pyo3(signature = (catalog, budget, resolution=1.0))]
fn static_optimal(py: Python<'_>, catalog: &PyCatalog, budget: f64, resolution: f64) -> PyResult<(Vec<usize>, f64, f64)> {
    let cat = &catalog.inner;
    let p = py
        .detach(|| solve_static(cat, budget, resolution, DEFAULT_TABLE_CAP))
        .map_err(to_py)?;
    let h = p.hit_rate(cat);
    Ok((p.prefix, p.value, h))
}

/// `("lr", layers)` or `("mr", version)`.
type Slot = (&'static str, usize);

/// Greedy hybrid placement. Each entry is `None`, `("lr", k)` for `k`
/// layers, or `("mr", v)` for the zero-based version `v` stored whole.
#[pyfunction]
fn hlfu_static(catalog: &PyCatalog, budget: f64) -> PyResult<(Vec<Option<Slot>>, f64, f64)> {
    let p = hlfu_static_placement(&catalog.inner, budget).map_err(to_py)?;
    let contents = p
        .contents
        .iter()
        .map(|r| match r {
            Residency::Absent => None,
            Residency::Lr(k) => Some(("lr", *k)),
            Residency::Mr(v) => Some(("mr", *v)),
        })
        .collect();
    Ok((contents, p.value, p.hit_rate(&catalog.inner)))
}

/// Online cache fed one request at a time.
#[pyclass(name = "Cache", module = "layercache_py", unsendable)]
struct PyCache {
    policy: Box<dyn CachePolicy>,
    catalog: layercache::Catalog,
}

#[pymethods]
impl PyCache {
    /// `policy` is one of the online names (llru, llfu, mrlru, hlru).
    #[new]
    fn new(catalog: &PyCatalog, policy: &str, capacity: f64) -> PyResult<Self> {
        let kind: PolicyKind = policy.parse().map_err(to_py)?;
        if matches!(kind, PolicyKind::LBelady | PolicyKind::StaticOpt | PolicyKind::HlfuStatic) {
            return Err(PyValueError::new_err(format!("`{policy}` is not an online policy")));
        }
        Ok(Self {
            policy: build_policy(kind, &catalog.inner, capacity, 1.0).map_err(to_py)?,
            catalog: catalog.inner.clone(),
        })
    }

    /// Serves a request for `version` of `object`; returns whether it hit.
    fn access(&mut self, object: usize, version: usize) -> PyResult<bool> {
        if object >= self.catalog.num_objects() || version >= self.catalog.num_versions() {
            return Err(PyIndexError::new_err(format!("request ({object}, {version}) outside the catalog")));
        }
        Ok(self.policy.access(object, version).hit)
    }

    #[getter]
    fn occupancy(&self) -> f64 {
        self.policy.occupancy()
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.policy.capacity()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.policy.name()
    }

    /// Resident units as `(kind, object, level)` with kind "layer" or "version".
    fn resident(&self) -> Vec<(&'static str, usize, usize)> {
        self.policy
            .resident_units()
            .into_iter()
            .map(|u| (if u.kind == UnitKind::Layer { "layer" } else { "version" }, u.object, u.level))
            .collect()
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.policy.check_invariants().map_err(PyValueError::new_err)
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Resolved preset config as JSON.
#[pyfunction]
fn preset(name: &str) -> PyResult<String> {
    figure_preset(name).and_then(|c| c.to_json()).map_err(to_py)
}

/// Runs a JSON config and returns `(csv_path, meta_path)`.
#[pyfunction]
fn run_config(py: Python<'_>, config_json: &str, out_dir: PathBuf) -> PyResult<(PathBuf, PathBuf)> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let out = py.detach(|| run_experiment(&cfg, &out_dir)).map_err(to_py)?;
    Ok((out.csv, out.meta))
}

/// Seed of stream `stream` under `root`.
#[pyfunction(name = "derive_seed")]
fn py_derive_seed(root: u64, stream: u64) -> u64 {
    derive_seed(root, stream)
}

#[pymodule]
fn layercache_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyCache>()?;
    m.add_function(wrap_pyfunction!(approx, m)?)?;
    m.add_function(wrap_pyfunction!(mr_approx, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(static_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(hlfu_static, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(py_derive_seed, m)?)?;
    Ok(())
}
