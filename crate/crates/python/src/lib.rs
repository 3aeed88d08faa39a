//! Python bindings for the `ergolab` crate.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ergolab::cocycle::{lyapunov_scan as scan, LyapunovEstimate, LyapunovParams};
use ergolab::dynamics::{Direction, OrbitSpec, Point};
use ergolab::halfplane::{self, MFunctionOptions};
use ergolab::measure::{self, EnergyGrid, GridSpec, Threshold};
use ergolab::potentials::{self, StepFunction, SupBound, TrigPoly};

fn err(e: ergolab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Translation `ω ↦ ω + α` on the torus.
#[pyclass(module = "ergolab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Transformation {
    inner: ergolab::dynamics::Transformation,
}

#[pymethods]
impl Transformation {
    /// `alpha` defaults to the golden mean on the circle.
    #[new]
    #[pyo3(signature = (alpha=None))]
    fn new(alpha: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = match alpha {
            Some(a) => ergolab::dynamics::Transformation::new(a).map_err(err)?,
            None => ergolab::dynamics::Transformation::golden(),
        };
        Ok(Transformation { inner })
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = Point::new(point).map_err(err)?;
        Ok(self.inner.apply(&p).map_err(err)?.coords().to_vec())
    }

    fn inverse_apply(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = Point::new(point).map_err(err)?;
        Ok(self.inner.inverse_apply(&p).map_err(err)?.coords().to_vec())
    }

    #[pyo3(signature = (start, length, backward=false))]
    fn orbit(&self, start: Vec<f64>, length: usize, backward: bool) -> PyResult<Vec<Vec<f64>>> {
        let spec = OrbitSpec {
            start: Point::new(start).map_err(err)?,
            length,
            direction: if backward { Direction::Backward } else { Direction::Forward },
        };
        let pts = self.inner.orbit(&spec).map_err(err)?;
        Ok(pts.into_iter().map(|p| p.coords().to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Transformation(alpha={:?})", self.inner.alpha())
    }
}

/// Continuous or step sampling function on the torus.
#[pyclass(module = "ergolab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct SamplingFunction {
    inner: potentials::SamplingFunction,
}

#[pymethods]
impl SamplingFunction {
    #[staticmethod]
    fn constant(c: f64) -> Self {
        SamplingFunction { inner: potentials::SamplingFunction::constant(c) }
    }

    /// `amplitude · cos 2πθ`.
    #[staticmethod]
    fn cosine(amplitude: f64) -> Self {
        SamplingFunction { inner: potentials::SamplingFunction::cosine(amplitude) }
    }

    /// `constant + Σ cos[i][k] cos 2π(k+1)ω_i + sin[i][k] sin 2π(k+1)ω_i`.
    #[staticmethod]
    #[pyo3(signature = (constant, cos, sin=None))]
    fn trig(constant: f64, cos: Vec<Vec<f64>>, sin: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let sin = sin.unwrap_or_else(|| vec![Vec::new(); cos.len()]);
        let t = TrigPoly::new(constant, cos, sin).map_err(err)?;
        Ok(SamplingFunction { inner: t.into() })
    }

    #[staticmethod]
    fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let s = StepFunction::new(breakpoints, values).map_err(err)?;
        Ok(SamplingFunction { inner: s.into() })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(SamplingFunction { inner: potentials::SamplingFunction::from_text(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn scaled(&self, factor: f64) -> Self {
        SamplingFunction { inner: self.inner.clone().scaled(factor) }
    }

    fn eval(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&Point::new(point).map_err(err)?).map_err(err)
    }

    fn sup_bound(&self) -> f64 {
        self.inner.sup_bound().value()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn is_continuous(&self) -> bool {
        self.inner.is_continuous()
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }

    /// Step approximation on `k` arcs; returns the step function and the
    /// sup-norm error bound.
    fn step_approximate(&self, k: usize) -> PyResult<(SamplingFunction, f64)> {
        let (s, bound) = potentials::step_approximate(&self.inner, k).map_err(err)?;
        Ok((SamplingFunction { inner: s.into() }, bound))
    }

    /// Mollification of a step function with kernel half-width `1/(n+n0)`.
    #[pyo3(signature = (n, n0=None))]
    fn mollify(&self, n: u32, n0: Option<u32>) -> PyResult<SamplingFunction> {
        let s = self.as_step()?;
        let n0 = n0.unwrap_or_else(|| potentials::default_n0(s));
        let m = potentials::mollify(s, n, n0).map_err(err)?;
        Ok(SamplingFunction { inner: m.into() })
    }

    #[pyo3(signature = (other, resolution=100_000))]
    fn l1_distance(&self, other: &SamplingFunction, resolution: usize) -> PyResult<f64> {
        potentials::l1_distance(&self.inner, &other.inner, resolution).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("SamplingFunction.from_text({:?})", self.inner.to_text())
    }
}

impl SamplingFunction {
    fn as_step(&self) -> PyResult<&StepFunction> {
        match &self.inner {
            potentials::SamplingFunction::Step(s) => Ok(s),
            _ => Err(PyValueError::new_err("expected a step function")),
        }
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &LyapunovEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", e.value)?;
    d.set_item("raw", e.raw)?;
    d.set_item("std_error", e.std_error)?;
    d.set_item("steps", e.steps)?;
    d.set_item("orbits", e.orbits)?;
    d.set_item("energy", e.energy)?;
    Ok(d)
}

/// Lyapunov exponent from transfer-matrix products along `orbits` orbits.
#[pyfunction]
#[pyo3(signature = (f, energy, t=None, steps=100_000, orbits=8, seed=0))]
fn lyapunov_real<'py>(
    py: Python<'py>,
    f: &SamplingFunction,
    energy: Complex64,
    t: Option<&Transformation>,
    steps: usize,
    orbits: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let params = LyapunovParams::new(steps, orbits, seed);
    let e = py
        .detach(|| ergolab::cocycle::lyapunov_real(&f.inner, energy, &t, &params))
        .map_err(err)?;
    estimate_dict(py, &e)
}

/// Lyapunov exponents at many energies sharing the same orbits.
#[pyfunction]
#[pyo3(signature = (f, energies, t=None, steps=100_000, orbits=8, seed=0))]
fn lyapunov_scan<'py>(
    py: Python<'py>,
    f: &SamplingFunction,
    energies: Vec<Complex64>,
    t: Option<&Transformation>,
    steps: usize,
    orbits: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let params = LyapunovParams::new(steps, orbits, seed);
    let est = py.detach(|| scan(&f.inner, &energies, &t, &params)).map_err(err)?;
    est.iter().map(|e| estimate_dict(py, e)).collect()
}

/// Lyapunov exponent at `Im E > 0` from the m-function, `|mean ln|m||`.
#[pyfunction]
#[pyo3(signature = (f, energy, t=None, samples=64, seed=0))]
fn lyapunov_complex<'py>(
    py: Python<'py>,
    f: &SamplingFunction,
    energy: Complex64,
    t: Option<&Transformation>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let e = py
        .detach(|| halfplane::lyapunov_complex(&f.inner, energy, &t, samples, seed))
        .map_err(err)?;
    estimate_dict(py, &e)
}

/// Weyl m-function at `omega` by backward Möbius iteration from `i`.
#[pyfunction]
#[pyo3(signature = (f, energy, omega, t=None, max_iter=10_000, tol=1e-12))]
fn m_function<'py>(
    py: Python<'py>,
    f: &SamplingFunction,
    energy: Complex64,
    omega: Vec<f64>,
    t: Option<&Transformation>,
    max_iter: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let w = Point::new(omega).map_err(err)?;
    let opts = MFunctionOptions { max_iter, tol };
    let v = halfplane::m_function(&f.inner, energy, &w, &t, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("m", v.m.z())?;
    d.set_item("iterations", v.iterations)?;
    d.set_item("last_difference", v.last_difference)?;
    d.set_item("contraction", v.contraction)?;
    Ok(d)
}

fn threshold(delta_gamma: Option<f64>) -> Threshold {
    delta_gamma.map_or(Threshold::Auto, Threshold::Fixed)
}

/// Measure of `{γ̂ < δ_γ}` on `cells` equal cells of `[lo, hi]`; `lo` and
/// `hi` default to `∓(2 + C)`. `delta_gamma=None` selects the automatic
/// threshold.
#[pyfunction]
#[pyo3(signature = (f, t=None, cells=400, lo=None, hi=None, delta_gamma=None, steps=100_000, orbits=8, seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_m<'py>(
    py: Python<'py>,
    f: &SamplingFunction,
    t: Option<&Transformation>,
    cells: usize,
    lo: Option<f64>,
    hi: Option<f64>,
    delta_gamma: Option<f64>,
    steps: usize,
    orbits: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let l = f.inner.sup_bound().spectral_half_width();
    let grid = EnergyGrid::new(lo.unwrap_or(-l), hi.unwrap_or(l), cells).map_err(err)?;
    let params = LyapunovParams::new(steps, orbits, seed);
    let m = py
        .detach(|| measure::estimate_m(&f.inner, &t, &grid, threshold(delta_gamma), &params))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", m.value)?;
    d.set_item("threshold", m.threshold)?;
    d.set_item("spacing", grid.spacing())?;
    d.set_item("unknown", m.unknown)?;
    d.set_item("energies", m.nodes.iter().map(|n| n.energy).collect::<Vec<_>>())?;
    d.set_item("gammas", m.gammas())?;
    d.set_item("std_errors", m.nodes.iter().map(|n| n.std_error).collect::<Vec<_>>())?;
    Ok(d)
}

/// Trapezoidal integral over `λ ∈ [0, lambda_max]` of the measure estimate
/// for `λ·f`.
#[pyfunction]
#[pyo3(signature = (f, lambda_max, lambda_count, t=None, cells=400, margin=0.0, delta_gamma=None, steps=100_000, orbits=8, seed=0))]
#[allow(clippy::too_many_arguments)]
fn coupling_integral(
    py: Python<'_>,
    f: &SamplingFunction,
    lambda_max: f64,
    lambda_count: usize,
    t: Option<&Transformation>,
    cells: usize,
    margin: f64,
    delta_gamma: Option<f64>,
    steps: usize,
    orbits: usize,
    seed: u64,
) -> PyResult<f64> {
    let t = t.map(|t| t.inner.clone()).unwrap_or_default();
    let params = LyapunovParams::new(steps, orbits, seed);
    let spec = GridSpec { cells, margin };
    let out = py
        .detach(|| {
            measure::coupling_integral(&f.inner, &t, lambda_max, lambda_count, &spec, threshold(delta_gamma), &params)
        })
        .map_err(err)?;
    Ok(out.integral)
}

/// Conformal-map weights `g(E)` for sup bound `bound`; zero outside the
/// open interval `(−2−C, 2+C)`.
#[pyfunction]
fn sc_weight(bound: f64, energies: Vec<f64>) -> PyResult<Vec<f64>> {
    let tri = halfplane::build_triangle(SupBound(bound)).map_err(err)?;
    Ok(halfplane::weight_table(&tri, &energies).map_err(err)?.weights)
}

/// Runs a TOML experiment configuration without writing files and returns
/// the report entries.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ergolab::config::parse_config(text).map_err(err)?;
    let report = py.detach(|| ergolab::runner::execute(&cfg)).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in &report.entries {
        match v {
            ergolab::report::Value::Num(x) => d.set_item(k, x)?,
            ergolab::report::Value::Int(i) => d.set_item(k, i)?,
            ergolab::report::Value::Text(s) => d.set_item(k, s)?,
            ergolab::report::Value::Bool(b) => d.set_item(k, b)?,
        }
    }
    for v in &report.verdicts {
        d.set_item(format!("verdict.{}", v.name), v.passed)?;
    }
    Ok(d)
}

#[pymodule]
#[pyo3(name = "ergolab")]
fn ergolab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Transformation>()?;
    m.add_class::<SamplingFunction>()?;
    m.add_function(wrap_pyfunction!(lyapunov_real, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_scan, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_complex, m)?)?;
    m.add_function(wrap_pyfunction!(m_function, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_m, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_integral, m)?)?;
    m.add_function(wrap_pyfunction!(sc_weight, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
