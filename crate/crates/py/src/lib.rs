//! Python bindings for maxlab.
//!
//! Fields cross the boundary as flat lists of floats in node order (last axis
//! fastest). Reports come back as nested dicts.
//!
//! ```python
//! import maxlab_py as ml
//! grid = ml.Grid(ml.Group.euclidean(1), [-1.0], [1.0], [257])
//! f = ml.Field.from_tag(grid, "gauge-power(0.5)")
//! fam = ml.Family(grid, centers_stride=8, r_max=0.5)
//! mf = ml.apply("maxal", f, fam)
//! ```

use maxlab::corpus::Generator;
use maxlab::field::RegionMask;
use maxlab::field_io::{read_field_file, write_field_file};
use maxlab::lipschitz::{characterization_report, ReportOptions, TargetNorm};
use maxlab::maximal::{BallFamily, CompiledFamily, FamilyParams, Operator};
use maxlab::orlicz::{luxemburg_norm, weak_norm, NormResult};
use maxlab::{Ball, GridSpec, GroupPoint, GroupSpec, SampledField, YoungFunction};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

pyo3::create_exception!(
    maxlab_py,
    MaxlabError,
    PyValueError,
    "Error raised by the maxlab core."
);

fn err(e: maxlab::Error) -> PyErr {
    MaxlabError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    match v {
        Value::Null => Ok(py.None().into_bound(py)),
        Value::Bool(b) => b.into_bound_py_any(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py),
        },
        Value::String(s) => s.into_bound_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            Ok(list.into_any())
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

/// Euclidean space or the first Heisenberg group, with optional constants.
#[pyclass(name = "Group", from_py_object)]
#[derive(Clone)]
pub struct PyGroup {
    inner: GroupSpec,
}

#[pymethods]
impl PyGroup {
    #[staticmethod]
    fn euclidean(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: GroupSpec::euclidean(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn heisenberg() -> Self {
        Self {
            inner: GroupSpec::heisenberg(),
        }
    }

    /// Returns a copy with `c1` and `c0` computed numerically.
    fn calibrate(&self, resolution: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.calibrate_constants(resolution).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    /// Homogeneous dimension.
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn c1(&self) -> Option<f64> {
        self.inner.c1
    }

    #[getter]
    fn c0(&self) -> Option<f64> {
        self.inner.c0
    }

    fn mul(&self, g: Vec<f64>, h: Vec<f64>) -> PyResult<Vec<f64>> {
        let (g, h) = (
            GroupPoint::new(g).map_err(err)?,
            GroupPoint::new(h).map_err(err)?,
        );
        Ok(self.inner.mul(&g, &h).map_err(err)?.into_inner())
    }

    fn inv(&self, g: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .inv(&GroupPoint::new(g).map_err(err)?)
            .map_err(err)?
            .into_inner())
    }

    fn dilate(&self, g: Vec<f64>, s: f64) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .dilate(&GroupPoint::new(g).map_err(err)?, s)
            .map_err(err)?
            .into_inner())
    }

    /// Homogeneous norm of `g`.
    fn norm(&self, g: Vec<f64>) -> PyResult<f64> {
        self.inner
            .hom_norm(&GroupPoint::new(g).map_err(err)?)
            .map_err(err)
    }

    fn ball_volume(&self, center: Vec<f64>, radius: f64) -> PyResult<f64> {
        self.inner
            .ball_volume(&Ball::at(&center, radius).map_err(err)?)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Group({})", self.inner.name())
    }
}

/// Uniform node grid on a box.
#[pyclass(name = "Grid", from_py_object)]
#[derive(Clone)]
pub struct PyGrid {
    inner: Arc<GridSpec>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(group: &PyGroup, lo: Vec<f64>, hi: Vec<f64>, points: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(GridSpec::new(group.inner.clone(), lo, hi, points).map_err(err)?),
        })
    }

    #[getter]
    fn group(&self) -> PyGroup {
        PyGroup {
            inner: self.inner.group.clone(),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn points(&self) -> Vec<usize> {
        self.inner.points_per_axis.clone()
    }

    #[getter]
    fn spacing(&self) -> Vec<f64> {
        self.inner.spacing().to_vec()
    }

    #[getter]
    fn cell_volume(&self) -> f64 {
        self.inner.cell_volume()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn node(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {index} out of range")));
        }
        Ok(self.inner.node(index))
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }
}

/// Values at the nodes of a grid.
#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: SampledField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: SampledField::from_values(grid.inner.clone(), values).map_err(err)?,
        })
    }

    /// Samples a generator such as `"indicator(0.5)"`, `"step"` or `"noise(3)"`.
    #[staticmethod]
    fn from_tag(grid: &PyGrid, tag: &str) -> PyResult<Self> {
        let generator = Generator::from_str(tag).map_err(err)?;
        Ok(Self {
            inner: generator.sample(&grid.inner).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: read_field_file(&path).map_err(err)?,
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        write_field_file(&self.inner, &path).map_err(err)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

/// A Young function from a descriptor: `"power(p)"`, `"c*power(p)"` or `"linfty"`.
#[pyclass(name = "Young", from_py_object)]
#[derive(Clone)]
pub struct PyYoung {
    inner: YoungFunction,
}

#[pymethods]
impl PyYoung {
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        Ok(Self {
            inner: YoungFunction::from_str(descriptor).map_err(err)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    /// `Phi(t)`; infinite values come back as `inf`.
    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(err)
    }

    /// Generalized inverse `inf { r : Phi(r) > s }`.
    fn inverse(&self, s: f64) -> f64 {
        self.inner.inverse(s)
    }

    fn conjugate(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.conjugate().map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Young({:?})", self.inner.label)
    }
}

/// A compiled ball family on a grid.
#[pyclass(name = "Family")]
pub struct PyFamily {
    inner: CompiledFamily,
}

#[pymethods]
impl PyFamily {
    /// `distinguished` lists extra balls as `(center, radius)` pairs.
    #[new]
    #[pyo3(signature = (grid, centers_stride=4, r_min=None, r_max=None, ratio=std::f64::consts::SQRT_2, cover=true, distinguished=Vec::new()))]
    fn new(
        grid: &PyGrid,
        centers_stride: usize,
        r_min: Option<f64>,
        r_max: Option<f64>,
        ratio: f64,
        cover: bool,
        distinguished: Vec<(Vec<f64>, f64)>,
    ) -> PyResult<Self> {
        let params = FamilyParams {
            centers_stride,
            r_min,
            r_max,
            ratio,
            cover,
        };
        let mut fam = BallFamily::generate(&grid.inner, &params).map_err(err)?;
        for (c, r) in distinguished {
            fam = fam.with_distinguished(Ball::at(&c, r).map_err(err)?);
        }
        Ok(Self {
            inner: fam.compile(&grid.inner).map_err(err)?,
        })
    }

    /// Balls as `(center, radius)` pairs in family order.
    fn balls(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner
            .balls()
            .iter()
            .map(|b| (b.center.coords().to_vec(), b.radius))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn norm_dict<'py>(py: Python<'py>, r: NormResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Luxemburg norm over the whole grid: `{value, iterations, converged}`.
#[pyfunction]
fn luxemburg<'py>(py: Python<'py>, f: &PyField, phi: &PyYoung) -> PyResult<Bound<'py, PyDict>> {
    let whole = RegionMask::whole(f.inner.grid());
    norm_dict(
        py,
        luxemburg_norm(&f.inner, &phi.inner, &whole).map_err(err)?,
    )
}

/// Weak Orlicz norm over the whole grid.
#[pyfunction]
fn weak<'py>(py: Python<'py>, f: &PyField, phi: &PyYoung) -> PyResult<Bound<'py, PyDict>> {
    let whole = RegionMask::whole(f.inner.grid());
    norm_dict(py, weak_norm(&f.inner, &phi.inner, &whole).map_err(err)?)
}

fn operator(name: &str) -> PyResult<Operator> {
    Operator::from_str(name).map_err(err)
}

/// Applies `maxal`, `sharp`, `maxcomm`, `comm-max` or `comm-sharp`.
#[pyfunction]
#[pyo3(signature = (op, f, family, alpha=0.0, b=None))]
fn apply(
    py: Python<'_>,
    op: &str,
    f: &PyField,
    family: &PyFamily,
    alpha: f64,
    b: Option<PyField>,
) -> PyResult<PyField> {
    let op = operator(op)?;
    let out = py.detach(|| op.apply(b.as_ref().map(|b| &b.inner), &f.inner, &family.inner, alpha));
    Ok(PyField {
        inner: out.map_err(err)?,
    })
}

/// Same as [`apply`] through the brute-force reference kernels.
#[pyfunction]
#[pyo3(signature = (op, f, family, alpha=0.0, b=None))]
fn apply_oracle(
    py: Python<'_>,
    op: &str,
    f: &PyField,
    family: &PyFamily,
    alpha: f64,
    b: Option<PyField>,
) -> PyResult<PyField> {
    let op = operator(op)?;
    let out =
        py.detach(|| op.apply_oracle(b.as_ref().map(|b| &b.inner), &f.inner, &family.inner, alpha));
    Ok(PyField {
        inner: out.map_err(err)?,
    })
}

/// Characterization report for symbol `b` as a nested dict.
#[pyfunction]
#[pyo3(signature = (b, beta, phi, centers_stride=4, r_max=None, probes_per_axis=5, weak_target=false, seed=0))]
#[allow(clippy::too_many_arguments)]
fn characterize<'py>(
    py: Python<'py>,
    b: &PyField,
    beta: f64,
    phi: &PyYoung,
    centers_stride: usize,
    r_max: Option<f64>,
    probes_per_axis: usize,
    weak_target: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let options = ReportOptions {
        family: FamilyParams {
            centers_stride,
            r_max,
            cover: true,
            ..FamilyParams::default()
        },
        probes_per_axis,
        target: if weak_target {
            TargetNorm::Weak
        } else {
            TargetNorm::Luxemburg
        },
        seed,
        ..ReportOptions::default()
    };
    let report = py
        .detach(|| characterization_report(&b.inner, beta, &phi.inner, &options))
        .map_err(err)?;
    let value = serde_json::to_value(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

#[pymodule]
pub fn maxlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MaxlabError", m.py().get_type::<MaxlabError>())?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyYoung>()?;
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(luxemburg, m)?)?;
    m.add_function(wrap_pyfunction!(weak, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(apply_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(characterize, m)?)?;
    Ok(())
}
