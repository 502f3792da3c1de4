//! Python bindings: series, simulation, training, prediction, model files
//! and the incremental-split benchmark.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cdhoc::decomp::Method;
use cdhoc::harness::{
    self, format_report_table, parse_model, EvalConfig, EvalMethod, EvalReport, SavedModel,
};
use cdhoc::lag;
use cdhoc::predictor::{self, LagPolicy, TrainConfig};
use cdhoc::series::{AlignedPair, SampledSeries, Unit};
use cdhoc::sim;
use cdhoc::svr::{self, SvrConfig};

create_exception!(
    cdhoc,
    ValidationError,
    PyValueError,
    "Malformed input or parameters."
);
create_exception!(
    cdhoc,
    TrainingError,
    PyRuntimeError,
    "A model could not be fitted or applied."
);

fn to_py(e: cdhoc::Error) -> PyErr {
    if e.is_validation() {
        ValidationError::new_err(e.to_string())
    } else {
        TrainingError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for cdhoc::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A regularly sampled series of UTC epoch seconds and values.
#[pyclass(name = "Series", module = "cdhoc", from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: SampledSeries,
}

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (start, interval, values, unit = "ppm"))]
    fn new(start: i64, interval: u32, values: Vec<f64>, unit: &str) -> PyResult<Self> {
        let unit: Unit = unit.parse().py()?;
        Ok(Self {
            inner: SampledSeries::new(start, interval, values, unit).py()?,
        })
    }

    #[getter]
    fn start(&self) -> i64 {
        self.inner.start()
    }

    #[getter]
    fn interval(&self) -> u32 {
        self.inner.interval()
    }

    #[getter]
    fn unit(&self) -> String {
        self.inner.unit().to_string()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn timestamps(&self) -> Vec<i64> {
        self.inner.timestamps().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(start={}, interval={}, len={}, unit='{}')",
            self.inner.start(),
            self.inner.interval(),
            self.inner.len(),
            self.inner.unit()
        )
    }
}

fn wrap(inner: SampledSeries) -> PySeries {
    PySeries { inner }
}

/// Trend, seasonal and irregular parts of a series.
#[pyclass(name = "Components", module = "cdhoc", get_all)]
struct PyComponents {
    trend: Vec<f64>,
    seasonal: Vec<f64>,
    irregular: Vec<f64>,
}

fn components(c: &cdhoc::decomp::ComponentSet) -> PyComponents {
    PyComponents {
        trend: c.trend.values().to_vec(),
        seasonal: c.seasonal.values().to_vec(),
        irregular: c.irregular.values().to_vec(),
    }
}

/// Occupancy counts plus the components they were reconstructed from.
#[pyclass(name = "Prediction", module = "cdhoc", get_all)]
struct PyPrediction {
    occupancy: PySeries,
    components: Py<PyComponents>,
    vacant: Vec<bool>,
    warnings: Vec<String>,
}

#[pyclass(name = "OccupancyModel", module = "cdhoc")]
struct PyOccupancyModel {
    inner: predictor::OccupancyModel,
}

#[pymethods]
impl PyOccupancyModel {
    #[getter]
    fn method(&self) -> String {
        self.inner.method().to_string()
    }

    #[getter]
    fn lag(&self) -> usize {
        self.inner.lag
    }

    #[getter]
    fn period(&self) -> usize {
        self.inner.period()
    }

    #[getter]
    fn interval(&self) -> u32 {
        self.inner.interval
    }

    /// Vacant window as (start, end) seconds after local midnight.
    #[getter]
    fn vacant_window(&self) -> Option<(i64, i64)> {
        self.inner.zpa.map(|w| (w.start, w.end))
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn predict(&self, py: Python<'_>, co2: &PySeries) -> PyResult<PyPrediction> {
        let r = predictor::predict(&self.inner, &co2.inner).py()?;
        Ok(PyPrediction {
            occupancy: wrap(r.occupancy),
            components: Py::new(py, components(&r.components))?,
            vacant: r.zpa_mask,
            warnings: r.warnings,
        })
    }

    fn without_zpa(&self) -> Self {
        Self {
            inner: self.inner.without_zpa(),
        }
    }

    fn to_text(&self) -> String {
        harness::occupancy_model_to_string(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        harness::save_model(path, &SavedModel::Occupancy(Box::new(self.inner.clone()))).py()
    }
}

#[pyclass(name = "SvrModel", module = "cdhoc")]
struct PySvrModel {
    inner: svr::SvrModel,
}

#[pymethods]
impl PySvrModel {
    #[getter]
    fn lag(&self) -> usize {
        self.inner.lag
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias
    }

    fn predict(&self, co2: &PySeries) -> PyResult<PySeries> {
        Ok(wrap(svr::predict_svr(&self.inner, &co2.inner).py()?))
    }

    fn to_text(&self) -> String {
        harness::svr_model_to_string(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        harness::save_model(path, &SavedModel::Svr(self.inner.clone())).py()
    }
}

fn saved_to_py(py: Python<'_>, model: SavedModel) -> PyResult<Py<PyAny>> {
    Ok(match model {
        SavedModel::Occupancy(m) => Py::new(py, PyOccupancyModel { inner: *m })?.into_any(),
        SavedModel::Svr(m) => Py::new(py, PySvrModel { inner: m })?.into_any(),
    })
}

/// Reads a model file; returns an OccupancyModel or an SvrModel.
#[pyfunction]
fn load_model(py: Python<'_>, path: &str) -> PyResult<Py<PyAny>> {
    saved_to_py(py, harness::load_model(path).py()?)
}

#[pyfunction]
fn model_from_text(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    saved_to_py(py, parse_model(text).py()?)
}

fn lag_policy(lag: Option<usize>, max_lag: usize) -> LagPolicy {
    match lag {
        Some(k) => LagPolicy::Fixed(k),
        None => LagPolicy::Search { max: max_lag },
    }
}

/// Trains the decomposition model. `lag` fixes the ventilation lag in
/// samples; otherwise lags up to `max_lag` are searched.
#[pyfunction]
#[pyo3(signature = (co2, occupancy, method = "std", lag = None, max_lag = 0, utc_offset = 0, zpa = true, period = None))]
#[allow(clippy::too_many_arguments)]
fn train(
    co2: &PySeries,
    occupancy: &PySeries,
    method: &str,
    lag: Option<usize>,
    max_lag: usize,
    utc_offset: i64,
    zpa: bool,
    period: Option<usize>,
) -> PyResult<PyOccupancyModel> {
    let cfg = TrainConfig {
        method: method.parse::<Method>().py()?,
        lag: lag_policy(lag, max_lag),
        utc_offset,
        zpa,
        period,
        ..TrainConfig::default()
    };
    Ok(PyOccupancyModel {
        inner: predictor::train(&co2.inner, &occupancy.inner, &cfg).py()?,
    })
}

#[pyfunction]
#[pyo3(signature = (co2, occupancy, lag = 0, window = 4, seed = 0))]
fn fit_svr(
    co2: &PySeries,
    occupancy: &PySeries,
    lag: usize,
    window: usize,
    seed: u64,
) -> PyResult<PySvrModel> {
    let cfg = SvrConfig {
        lag,
        window,
        seed,
        ..SvrConfig::default()
    };
    Ok(PySvrModel {
        inner: svr::fit_svr(&co2.inner, &occupancy.inner, &cfg).py()?,
    })
}

/// Decomposes a series with "std" or "stl"; `period` defaults to one day.
#[pyfunction]
#[pyo3(signature = (series, method = "std", period = None))]
fn decompose(series: &PySeries, method: &str, period: Option<usize>) -> PyResult<PyComponents> {
    let cfg = TrainConfig {
        method: method.parse::<Method>().py()?,
        period,
        ..TrainConfig::default()
    };
    let period = cfg.period_for(series.inner.interval());
    let c = cfg.decomp_config(period).decompose(&series.inner).py()?;
    Ok(components(&c))
}

/// Returns the chosen lag and the NRMSE at every lag in `0..=max_lag`.
#[pyfunction]
fn select_lag(co2: &PySeries, occupancy: &PySeries, max_lag: usize) -> PyResult<(usize, Vec<f64>)> {
    let sweep = lag::select_lag(&co2.inner, &occupancy.inner, max_lag).py()?;
    Ok((sweep.best_lag, sweep.fits.iter().map(|f| f.nrmse).collect()))
}

/// Percentage of samples whose prediction is within `tolerance` occupants.
#[pyfunction]
fn accuracy_with_tolerance(
    predicted: &PySeries,
    actual: &PySeries,
    tolerance: f64,
) -> PyResult<f64> {
    let (p, a) = harness::common_samples(&predicted.inner, &actual.inner).py()?;
    harness::accuracy_with_tolerance(&p, &a, tolerance).py()
}

fn pair(co2: &PySeries, occupancy: &PySeries) -> AlignedPair {
    AlignedPair {
        co2: co2.inner.clone(),
        occupancy: occupancy.inner.clone(),
        lag_applied: 0,
    }
}

/// (train_days, test_days) for every incremental split.
#[pyfunction]
#[pyo3(signature = (co2, occupancy, utc_offset = 0))]
fn incremental_splits(
    co2: &PySeries,
    occupancy: &PySeries,
    utc_offset: i64,
) -> PyResult<Vec<(usize, usize)>> {
    let splits = harness::incremental_splits(&pair(co2, occupancy), utc_offset).py()?;
    Ok(splits.iter().map(|s| (s.train_days, s.test_days)).collect())
}

#[pyclass(name = "Report", module = "cdhoc")]
struct PyReport {
    inner: EvalReport,
}

#[pymethods]
impl PyReport {
    /// (train_days, test_days, method, tolerance, accuracy, mae) per row.
    #[getter]
    fn rows(&self) -> Vec<(usize, usize, String, f64, f64, f64)> {
        self.inner
            .rows
            .iter()
            .map(|r| {
                (
                    r.train_days,
                    r.test_days,
                    r.method.to_string(),
                    r.tolerance,
                    r.accuracy,
                    r.mae,
                )
            })
            .collect()
    }

    /// (method, tolerance, average accuracy).
    #[getter]
    fn averages(&self) -> Vec<(String, f64, f64)> {
        self.inner
            .averages()
            .into_iter()
            .map(|(m, x, a)| (m.to_string(), x, a))
            .collect()
    }

    #[getter]
    fn failures(&self) -> Vec<(usize, String, String)> {
        self.inner
            .failures
            .iter()
            .map(|f| (f.train_days, f.method.to_string(), f.error.clone()))
            .collect()
    }

    fn table(&self) -> String {
        format_report_table(&self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (co2, occupancy, utc_offset = 0, tolerances = vec![0.0, 1.0], methods = vec!["std".to_string(), "stl".to_string(), "svr".to_string()], max_lag = 0, seed = 0))]
fn run_benchmark(
    py: Python<'_>,
    co2: &PySeries,
    occupancy: &PySeries,
    utc_offset: i64,
    tolerances: Vec<f64>,
    methods: Vec<String>,
    max_lag: usize,
    seed: u64,
) -> PyResult<PyReport> {
    let methods = methods
        .iter()
        .map(|m| m.parse::<EvalMethod>().py())
        .collect::<PyResult<Vec<_>>>()?;
    let cfg = EvalConfig {
        tolerances,
        methods,
        train: TrainConfig {
            lag: LagPolicy::Search { max: max_lag },
            utc_offset,
            ..TrainConfig::default()
        },
        svr: SvrConfig {
            seed,
            ..SvrConfig::default()
        },
        ..EvalConfig::default()
    };
    let data = pair(co2, occupancy);
    let report = py.detach(|| harness::run_benchmark(&data, &cfg)).py()?;
    Ok(PyReport { inner: report })
}

/// Simulated (co2, occupancy, utc_offset) for the "office" or "cinema" preset.
#[pyfunction]
#[pyo3(signature = (name, seed = 0, days = None))]
fn simulate_preset(
    name: &str,
    seed: u64,
    days: Option<usize>,
) -> PyResult<(PySeries, PySeries, i64)> {
    let mut p = sim::preset(name).py()?;
    if let Some(d) = days {
        p.days = d;
    }
    let (co2, occ) = p.generate(seed).py()?;
    Ok((wrap(co2), wrap(occ), p.utc_offset))
}

/// Reads a dataset CSV; returns (co2, occupancy or None, utc_offset).
#[pyfunction]
fn load_dataset(path: &str) -> PyResult<(PySeries, Option<PySeries>, i64)> {
    let d = harness::load_dataset(path, &harness::IngestOptions::default()).py()?;
    Ok((wrap(d.co2), d.occupancy.map(wrap), d.utc_offset))
}

#[pyfunction]
#[pyo3(signature = (path, co2, occupancy = None, utc_offset = 0))]
fn save_dataset(
    path: &str,
    co2: &PySeries,
    occupancy: Option<PySeries>,
    utc_offset: i64,
) -> PyResult<()> {
    harness::save_dataset(
        path,
        &co2.inner,
        occupancy.as_ref().map(|o| &o.inner),
        utc_offset,
    )
    .py()
}

#[pymodule]
#[pyo3(name = "cdhoc")]
pub fn cdhoc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add("TrainingError", m.py().get_type::<TrainingError>())?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyComponents>()?;
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyOccupancyModel>()?;
    m.add_class::<PySvrModel>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(simulate_preset, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(save_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(select_lag, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(fit_svr, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(model_from_text, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_with_tolerance, m)?)?;
    m.add_function(wrap_pyfunction!(incremental_splits, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
