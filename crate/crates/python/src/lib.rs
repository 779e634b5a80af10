//! Python bindings. Rationals cross the boundary as `fractions.Fraction`;
//! reports and certificates come back as plain dicts (the CLI's JSON).

use propa_core::flows::{lift_and_project, verify_flow_certificate, verify_measure_family, FlowCertificate, FlowError, MeasureFamily};
use propa_core::graph::{dual_scale, from_spec};
use propa_core::invariants::{
    cheeger_at_scale, cube_epsilon_formula, epsilon_at_scale, girth_cheeger_formula, girth_epsilon_formula,
    mean_property_a_value, uniform_flows_value, CheegerMethod, EpsilonMethod, InvariantError, ScaleSpec,
};
use propa_core::problems::DEFAULT_SUBSET_CAP;
use propa_core::symmetry::{close_group, orbits as group_orbits, AutomorphismSet};
use propa_core::{Graph, Rational, Scale};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyString};

create_exception!(propa, ResourceLimitError, PyRuntimeError, "LP size ceiling or subset-enumeration cap hit.");
create_exception!(propa, VerificationError, PyRuntimeError, "Two certificates that must agree did not.");

fn invariant_err(e: InvariantError) -> PyErr {
    if e.is_resource_limit() {
        ResourceLimitError::new_err(e.to_string())
    } else if matches!(e, InvariantError::Verification(_)) {
        VerificationError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, x: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((x.to_string(),))
}

/// Anything whose `str()` is `p/q` or an integer: `Fraction`, `int`, `str`.
fn rational(x: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = x.str()?.to_string();
    s.parse().map_err(|_| PyValueError::new_err(format!("not an exact rational: {s:?}")))
}

fn rationals(xs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rational>> {
    xs.iter().map(rational).collect()
}

fn from_json<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn to_json(obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let py = obj.py();
    // Fractions serialize as their "p/q" string
    let kw = PyDict::new(py);
    kw.set_item("default", py.get_type::<PyString>())?;
    let s: String = py.import("json")?.call_method("dumps", (obj,), Some(&kw))?.extract()?;
    serde_json::from_str(&s).map_err(value_err)
}

/// A radius, or explicit per-vertex sets.
fn scale_spec(scale: &Bound<'_, PyAny>) -> PyResult<ScaleSpec> {
    if let Ok(r) = scale.extract::<usize>() {
        return Ok(ScaleSpec::Radius(r));
    }
    let sets: Vec<Vec<usize>> = scale
        .extract()
        .map_err(|_| PyValueError::new_err("scale must be a radius or a list of vertex lists"))?;
    Ok(ScaleSpec::Explicit(Scale { sets, radius: None }))
}

#[pyclass(name = "Graph", module = "propa", frozen)]
struct PyGraph {
    inner: Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (vertices, edges, name=None))]
    fn new(vertices: usize, edges: Vec<(usize, usize)>, name: Option<String>) -> PyResult<Self> {
        Ok(PyGraph { inner: Graph::new(vertices, edges, name).map_err(value_err)? })
    }

    /// `hypercube:3`, `grid:3x3`, `ladder:7`, `heawood`, `union:cycle:3+path:2`, ...
    #[staticmethod]
    fn generate(spec: &str) -> PyResult<Self> {
        let g = from_spec(spec).map_err(value_err)?;
        Ok(PyGraph { inner: g })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: Graph::from_text(text).map_err(value_err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[pyo3(signature = (highlight=Vec::new()))]
    fn to_dot(&self, highlight: Vec<usize>) -> String {
        self.inner.to_dot(&highlight)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name().map(str::to_string)
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph({} vertices, {} edges{})",
            self.inner.vertex_count(),
            self.inner.edge_count(),
            self.inner.name().map(|n| format!(", {n:?}")).unwrap_or_default()
        )
    }
}

/// `ε` at the scale with matching primal and dual certificates, as a dict.
#[pyfunction]
#[pyo3(signature = (graph, scale=None, method="primal"))]
fn epsilon<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    scale: Option<&Bound<'py, PyAny>>,
    method: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = scale.map(scale_spec).transpose()?.unwrap_or(ScaleSpec::Radius(1));
    let method: EpsilonMethod = method.parse().map_err(invariant_err)?;
    let g = &graph.inner;
    let rep = py.detach(|| epsilon_at_scale(g, spec, method)).map_err(invariant_err)?;
    let d = from_json(py, &rep.to_json(g))?;
    d.set_item("epsilon", fraction(py, &rep.epsilon)?)?;
    Ok(d)
}

/// `(gamma, witness)`; the witness is `None` for the LP method.
#[pyfunction]
#[pyo3(signature = (graph, scale=None, method="brute", cap=DEFAULT_SUBSET_CAP))]
fn cheeger<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    scale: Option<&Bound<'py, PyAny>>,
    method: &str,
    cap: usize,
) -> PyResult<(Bound<'py, PyAny>, Option<Vec<usize>>)> {
    let spec = scale.map(scale_spec).transpose()?.unwrap_or(ScaleSpec::Radius(1));
    let method: CheegerMethod = method.parse().map_err(invariant_err)?;
    let g = &graph.inner;
    let rep = py.detach(|| cheeger_at_scale(g, spec, method, cap)).map_err(invariant_err)?;
    Ok((fraction(py, &rep.gamma)?, rep.witness))
}

#[pyfunction]
#[pyo3(signature = (graph, scale=None))]
fn uniform_value<'py>(py: Python<'py>, graph: &PyGraph, scale: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let spec = scale.map(scale_spec).transpose()?.unwrap_or(ScaleSpec::Radius(1));
    let v = uniform_flows_value(&graph.inner, spec).map_err(invariant_err)?;
    fraction(py, &v)
}

#[pyfunction]
#[pyo3(signature = (graph, scale=None))]
fn mean_value<'py>(py: Python<'py>, graph: &PyGraph, scale: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let spec = scale.map(scale_spec).transpose()?.unwrap_or(ScaleSpec::Radius(1));
    let v = mean_property_a_value(&graph.inner, spec).map_err(invariant_err)?;
    fraction(py, &v)
}

/// Flow certificate dict for demands `eta` and capacities `kappa` (edge order);
/// raises `ValueError` naming the violated set otherwise.
#[pyfunction]
#[pyo3(signature = (graph, eta, kappa, scale=None))]
fn lift<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    eta: Vec<Bound<'py, PyAny>>,
    kappa: Vec<Bound<'py, PyAny>>,
    scale: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let g = &graph.inner;
    let spec = scale.map(scale_spec).transpose()?.unwrap_or(ScaleSpec::Radius(1));
    let dsc = dual_scale(&spec.resolve(g).map_err(invariant_err)?).map_err(value_err)?;
    let (eta, kappa) = (rationals(&eta)?, rationals(&kappa)?);
    match lift_and_project(g, &dsc, &eta, &kappa) {
        Ok(fc) => from_json(py, &fc.to_json(g)),
        Err(FlowError::Infeasible { focus, witness }) => {
            Err(PyValueError::new_err(format!("demands of {witness:?} (focus {focus}) exceed their boundary capacity")))
        }
        Err(e) => Err(value_err(e)),
    }
}

/// Checks a certificate dict: an `epsilon` report, a bare flow certificate
/// (`eta`/`kappa`/`flows`) or a measure family (`epsilon`/`xi`). Returns the
/// list of violations, empty when valid.
#[pyfunction]
#[pyo3(signature = (graph, certificate, scale=None))]
fn verify(graph: &PyGraph, certificate: &Bound<'_, PyAny>, scale: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<String>> {
    let g = &graph.inner;
    let doc = to_json(certificate)?;
    let spec = match (scale, doc.get("scale")) {
        (Some(s), _) => scale_spec(s)?,
        (None, Some(s)) if s.get("sets").is_some() => {
            ScaleSpec::Explicit(serde_json::from_value(s.clone()).map_err(value_err)?)
        }
        _ => ScaleSpec::Radius(1),
    };
    let sc = spec.resolve(g).map_err(invariant_err)?;
    let dsc = dual_scale(&sc).map_err(value_err)?;
    let parse_rat = |v: &serde_json::Value| -> PyResult<Rational> {
        v.as_str().ok_or_else(|| value_err("expected a \"p/q\" string"))?.parse().map_err(value_err)
    };
    let claimed = doc.get("epsilon").or_else(|| doc.get("objective")).map(parse_rat).transpose()?;
    let mut bad = Vec::new();
    let primal = doc.get("primal").or_else(|| doc.get("xi").map(|_| &doc));
    if let Some(p) = primal {
        let mf: MeasureFamily = serde_json::from_value(p.clone()).map_err(value_err)?;
        bad.extend(verify_measure_family(g, &sc, &mf).violations);
        if claimed.as_ref().is_some_and(|c| *c != mf.epsilon) {
            bad.push("measure family bound differs from the claimed value".into());
        }
    }
    let dual = doc.get("dual").or_else(|| doc.get("flows").map(|_| &doc));
    if let Some(d) = dual {
        let fc = FlowCertificate::from_json(d, g).map_err(value_err)?;
        bad.extend(verify_flow_certificate(g, &dsc, &fc, claimed.as_ref()).violations);
    }
    if primal.is_none() && dual.is_none() {
        return Err(value_err("not a certificate: expected primal/dual, flows or xi"));
    }
    Ok(bad)
}

#[pyfunction]
fn cube_formula<'py>(py: Python<'py>, n: u32, s: u32) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &cube_epsilon_formula(n, s))
}

/// `(epsilon, gamma)` for `d`-regular graphs of girth above `2s+1`.
#[pyfunction]
fn girth_formula<'py>(py: Python<'py>, d: u32, s: u32) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let e = girth_epsilon_formula(d, s).map_err(invariant_err)?;
    let c = girth_cheeger_formula(d, s).map_err(invariant_err)?;
    Ok((fraction(py, &e)?, fraction(py, &c)?))
}

/// `(order, vertex_orbits, edge_orbits)` of the group generated by `generators`.
#[pyfunction]
fn orbits(graph: &PyGraph, generators: Vec<Vec<usize>>) -> PyResult<(usize, Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let g = &graph.inner;
    let set = close_group(&AutomorphismSet::new(generators), g).map_err(value_err)?;
    let orb = group_orbits(&set, g).map_err(value_err)?;
    Ok((set.order().unwrap_or(1), orb.vertex, orb.edge))
}

#[pymodule]
fn propa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(cheeger, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_value, m)?)?;
    m.add_function(wrap_pyfunction!(mean_value, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(cube_formula, m)?)?;
    m.add_function(wrap_pyfunction!(girth_formula, m)?)?;
    m.add_function(wrap_pyfunction!(orbits, m)?)?;
    m.add("ResourceLimitError", m.py().get_type::<ResourceLimitError>())?;
    m.add("VerificationError", m.py().get_type::<VerificationError>())?;
    Ok(())
}
