//! Python bindings. Rationals cross the boundary as `fractions.Fraction`.

#![allow(clippy::useless_conversion)]

use std::collections::BTreeMap;

use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cclab_core::approximation::density_approximation;
use cclab_core::examples::{generate as gen_structure, ExampleSpec};
use cclab_core::io::{
    certificate_from_json, certificate_to_json, instance_to_json, structure_from_json, tower_to_json,
};
use cclab_core::lacunarity::lacunarity_graph;
use cclab_core::measures::{self, dichotomy_solve, level_values, verify_certificate, SolveOptions};
use cclab_core::model::{self, Domain, FiniteSubrelation, Interval, Mode, Structure};
use cclab_core::rational::{fmt_q, parse_q};
use cclab_core::Q;

fn err(e: cclab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Q) -> PyResult<PyObject> {
    let frac = py.import_bound("fractions")?.getattr("Fraction")?;
    Ok(frac.call1((fmt_q(v),))?.unbind())
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Q> {
    if obj.is_instance_of::<pyo3::types::PyFloat>() {
        return Err(PyTypeError::new_err("pass an int, str or Fraction; floats are inexact"));
    }
    parse_q(&obj.str()?.to_string()).map_err(err)
}

fn ids(inst: &model::Instance, names: &[String]) -> PyResult<Vec<usize>> {
    names.iter().map(|n| inst.id(n).map_err(err)).collect()
}

#[pyclass(module = "cclab", frozen)]
#[derive(Clone)]
struct Instance {
    inner: model::Instance,
}

#[pymethods]
impl Instance {
    /// `potentials` maps point → weight, `classes` maps class label → point names.
    #[new]
    fn new(potentials: &Bound<'_, PyDict>, classes: BTreeMap<String, Vec<String>>) -> PyResult<Self> {
        let mut names = Vec::new();
        let mut labels = Vec::new();
        let mut ws = Vec::new();
        for (label, pts) in classes {
            for p in pts {
                let w =
                    potentials.get_item(&p)?.ok_or_else(|| PyValueError::new_err(format!("no potential for `{p}`")))?;
                ws.push(from_py(&w)?);
                names.push(p);
                labels.push(label.clone());
            }
        }
        let inner = model::Instance::from_parts(names, labels, ws, vec![], Mode::Exact).map_err(err)?;
        Ok(Instance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match structure_from_json(text, None).map_err(err)? {
            Structure::Instance(inner) => Ok(Instance { inner }),
            Structure::Tower(_) => Err(PyValueError::new_err("file holds a tower; use Tower.from_json")),
        }
    }

    fn to_json(&self) -> PyResult<String> {
        instance_to_json(&self.inner).map_err(err)
    }

    #[getter]
    fn points(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn classes(&self) -> BTreeMap<String, Vec<String>> {
        (0..self.inner.num_classes())
            .map(|c| {
                let pts = self.inner.class(c).iter().map(|&x| self.inner.name(x).to_string()).collect();
                (self.inner.class_name(c).to_string(), pts)
            })
            .collect()
    }

    /// Normalized potential w(x), equal to 1 at the least point of each class.
    fn potential(&self, py: Python<'_>, x: &str) -> PyResult<PyObject> {
        to_py(py, self.inner.potential(self.inner.id(x).map_err(err)?))
    }

    /// ρ(x, y) = w(x)/w(y).
    fn rho(&self, py: Python<'_>, x: &str, y: &str) -> PyResult<PyObject> {
        let (a, b) = (self.inner.id(x).map_err(err)?, self.inner.id(y).map_err(err)?);
        to_py(py, &self.inner.rho(a, b).map_err(err)?)
    }

    /// |Y|^ρ_z = Σ_{y∈Y} ρ(y, z).
    fn rho_size(&self, py: Python<'_>, ys: Vec<String>, z: &str) -> PyResult<PyObject> {
        let ys = ids(&self.inner, &ys)?;
        let z = self.inner.id(z).map_err(err)?;
        to_py(py, &self.inner.rho_size(&ys, model::Anchor::Point(z)).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance({} points, {} classes)", self.inner.len(), self.inner.num_classes())
    }
}

#[pyclass(module = "cclab", frozen)]
#[derive(Clone)]
struct Tower {
    inner: model::Tower,
}

#[pymethods]
impl Tower {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match structure_from_json(text, None).map_err(err)? {
            Structure::Tower(inner) => Ok(Tower { inner }),
            Structure::Instance(_) => Err(PyValueError::new_err("file holds a finite instance")),
        }
    }

    fn to_json(&self) -> PyResult<String> {
        tower_to_json(&self.inner).map_err(err)
    }

    #[getter]
    fn num_levels(&self) -> usize {
        self.inner.num_levels()
    }

    fn level(&self, n: usize) -> PyResult<Instance> {
        if n >= self.inner.num_levels() {
            return Err(PyValueError::new_err(format!("level {n} out of range")));
        }
        Ok(Instance { inner: self.inner.level(n).clone() })
    }

    /// Set name → (min, max) of ν_{[x]_{F_n}}(U) over the blocks of level n.
    fn level_values(&self, py: Python<'_>, n: usize) -> PyResult<BTreeMap<String, (PyObject, PyObject)>> {
        if n >= self.inner.num_levels() {
            return Err(PyValueError::new_err(format!("level {n} out of range")));
        }
        level_values(&self.inner, n)
            .into_iter()
            .map(|(k, v)| Ok((k, (to_py(py, &v.min)?, to_py(py, &v.max)?))))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Tower({} levels, {} points at the top)", self.inner.num_levels(), self.inner.top().len())
    }
}

#[derive(FromPyObject)]
enum AnyStructure {
    Instance(Instance),
    Tower(Tower),
}

impl AnyStructure {
    fn domain(&self) -> Domain<'_> {
        match self {
            AnyStructure::Instance(i) => Domain::Instance(&i.inner),
            AnyStructure::Tower(t) => Domain::Tower(&t.inner),
        }
    }
}

#[pyclass(module = "cclab", frozen, get_all)]
struct Certificate {
    /// "measure" or "compression".
    kind: String,
    route: String,
    json: String,
}

#[pymethods]
impl Certificate {
    fn __repr__(&self) -> String {
        format!("Certificate(kind={:?}, route={:?})", self.kind, self.route)
    }
}

#[pyclass(module = "cclab", frozen, get_all)]
struct Verification {
    valid: bool,
    conditional: bool,
    messages: Vec<String>,
}

#[pymethods]
impl Verification {
    fn __bool__(&self) -> bool {
        self.valid
    }

    fn __repr__(&self) -> String {
        let b = |v: bool| if v { "True" } else { "False" };
        format!("Verification(valid={}, conditional={})", b(self.valid), b(self.conditional))
    }
}

/// Builds one of the bundled examples.
#[pyfunction]
#[pyo3(signature = (kind, levels = 4, classes = 1, p = None, seed = 0))]
fn generate(
    py: Python<'_>,
    kind: &str,
    levels: usize,
    classes: usize,
    p: Option<&Bound<'_, PyAny>>,
    seed: u64,
) -> PyResult<PyObject> {
    let mut spec = ExampleSpec::new(kind.parse().map_err(err)?, levels);
    spec.classes = classes;
    spec.seed = seed;
    spec.p = p.map(from_py).transpose()?;
    Ok(match gen_structure(&spec).map_err(err)? {
        Structure::Instance(inner) => Instance { inner }.into_py(py),
        Structure::Tower(inner) => Tower { inner }.into_py(py),
    })
}

/// Produces a measure or compression certificate.
#[pyfunction]
#[pyo3(signature = (structure, class_weights = None))]
fn solve(structure: AnyStructure, class_weights: Option<Vec<Bound<'_, PyAny>>>) -> PyResult<Certificate> {
    let mut opts = SolveOptions::default();
    if let Some(ws) = class_weights {
        opts.class_weights = Some(ws.iter().map(from_py).collect::<PyResult<_>>()?);
    }
    let d = structure.domain();
    let cert = dichotomy_solve(d, &opts).map_err(err)?;
    let kind = format!("{:?}", cert.kind()).to_lowercase();
    let json = certificate_to_json(d, &cert).map_err(err)?;
    Ok(Certificate { kind, route: cert.route, json })
}

/// Checks a certificate, given as a `Certificate` or its JSON text.
#[pyfunction]
fn verify(structure: AnyStructure, certificate: &Bound<'_, PyAny>) -> PyResult<Verification> {
    let text = match certificate.downcast::<Certificate>() {
        Ok(c) => c.get().json.clone(),
        Err(_) => certificate.extract::<String>()?,
    };
    let d = structure.domain();
    let cert = certificate_from_json(d, &text).map_err(err)?;
    let r = verify_certificate(d, &cert).map_err(err)?;
    Ok(Verification { valid: r.valid, conditional: r.conditional, messages: r.messages })
}

/// The normalized invariant measure concentrated on one class.
#[pyfunction]
fn class_measure(py: Python<'_>, inst: &Instance, class_name: &str) -> PyResult<BTreeMap<String, PyObject>> {
    let c = inst
        .inner
        .skeleton()
        .class_by_name(class_name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown class `{class_name}`")))?;
    let mu = measures::class_measure(&inst.inner, c).map_err(err)?;
    inst.inner.class(c).iter().map(|&x| Ok((inst.inner.name(x).to_string(), to_py(py, &mu.weights[x])?))).collect()
}

/// Quotient by the finite subequivalence relation with the given blocks;
/// unlisted points stay singletons. Quotient points are named by their least member.
#[pyfunction]
fn quotient(inst: &Instance, blocks: Vec<Vec<String>>) -> PyResult<Instance> {
    let blocks = blocks.iter().map(|b| ids(&inst.inner, b)).collect::<PyResult<Vec<_>>>()?;
    let f = FiniteSubrelation::from_blocks(&inst.inner, blocks).map_err(err)?;
    let q = model::quotient_by(&inst.inner, &f).map_err(err)?;
    Ok(Instance { inner: q.instance })
}

/// Edges {x, y} of the lacunarity graph for the open interval (lo, hi).
#[pyfunction]
fn lacunarity_edges(inst: &Instance, lo: &Bound<'_, PyAny>, hi: &Bound<'_, PyAny>) -> PyResult<Vec<(String, String)>> {
    let u = Interval::open(from_py(lo)?, from_py(hi)?).map_err(err)?;
    let g = lacunarity_graph(&inst.inner, &u);
    let name = |x: usize| inst.inner.name(x).to_string();
    Ok(g.edges().into_iter().map(|(x, y)| (name(x), name(y))).collect())
}

/// Returns (B, C, blocks) from the density approximation of `a` at ratio `r`.
#[pyfunction]
fn density(
    inst: &Instance,
    a: Vec<String>,
    r: &Bound<'_, PyAny>,
) -> PyResult<(Vec<String>, Vec<String>, Vec<Vec<String>>)> {
    let a = ids(&inst.inner, &a)?;
    let out = density_approximation(&inst.inner, &a, &from_py(r)?).map_err(err)?;
    let names = |s: &[usize]| s.iter().map(|&x| inst.inner.name(x).to_string()).collect::<Vec<_>>();
    Ok((names(&out.b), names(&out.c), out.family.iter().map(|s| names(s)).collect()))
}

#[pymodule]
fn cclab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Tower>()?;
    m.add_class::<Certificate>()?;
    m.add_class::<Verification>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(class_measure, m)?)?;
    m.add_function(wrap_pyfunction!(quotient, m)?)?;
    m.add_function(wrap_pyfunction!(lacunarity_edges, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    Ok(())
}
