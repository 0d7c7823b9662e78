//! Python bindings. Rationals cross the boundary as `fractions.Fraction`,
//! group specs, elements and reports as plain JSON-shaped Python objects.

use std::path::Path;

use groupprob::envelope::{Envelope, FiniteDistribution};
use groupprob::harness::{emit_summary, named_family, read_ledger, run_batch as run_batch_core, BatchManifest};
use groupprob::instances::{group_from_json, KINDS};
use groupprob::normedness::check_j_normed;
use groupprob::rademacher::{
    check_kk as kk, check_levy as levy, check_mont as mont, check_tail_product, enumerate_rademacher, kk_constant as
    kk_const, moment, sharpness_ratio, LaminarFamily, MontMode, RademacherScenario, Regime,
};
use groupprob::word_norm::{biinv_norm, parse_word, SearchLimits};
use groupprob::{audit_axioms, format_rational, parse_rational, Element, Error, GroupInstance, MetricSemigroup, Scalar};
use num::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyList, PyString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

create_exception!(groupprob, GroupProbError, PyValueError, "Raised with the library's error code as prefix.");

fn err(e: Error) -> PyErr {
    GroupProbError::new_err(format!("{}: {}", e.code(), e))
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for groupprob::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| err(Error::MalformedJson(e.to_string())))
}

/// Dicts pass through; a string is read as JSON text.
fn doc_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    match obj.downcast::<PyString>() {
        Ok(s) => serde_json::from_str(s.to_str()?).map_err(|e| err(Error::MalformedJson(e.to_string()))),
        Err(_) => to_value(obj),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(|e| err(Error::MalformedJson(e.to_string())))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn fraction(py: Python<'_>, r: &BigRational) -> PyResult<PyObject> {
    Ok(py.import("fractions")?.getattr("Fraction")?.call1((format_rational(r),))?.unbind())
}

fn scalar(py: Python<'_>, s: &Scalar) -> PyResult<PyObject> {
    match s {
        Scalar::Exact(r) => fraction(py, r),
        Scalar::Approx(x) => Ok(x.into_pyobject(py)?.into_any().unbind()),
    }
}

/// Accepts int, str ("p/q") or Fraction.
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    parse_rational(&obj.str()?.to_string()).or_raise()
}

fn exact(obj: &Bound<'_, PyAny>) -> PyResult<Scalar> {
    rational(obj).map(Scalar::Exact)
}

/// A concrete metric group or semigroup.
#[pyclass(name = "Group", module = "groupprob", frozen)]
#[derive(Clone)]
struct PyGroup {
    inner: GroupInstance,
}

impl PyGroup {
    fn elem(&self, obj: &Bound<'_, PyAny>) -> PyResult<Element> {
        self.inner.element_from_json(&to_value(obj)?).or_raise()
    }

    fn elems(&self, list: &Bound<'_, PyAny>) -> PyResult<Vec<Element>> {
        list.try_iter()?.map(|e| self.elem(&e?)).collect()
    }

    fn out(&self, py: Python<'_>, e: &Element) -> PyResult<PyObject> {
        to_py(py, &self.inner.element_to_json(e))
    }
}

#[pymethods]
impl PyGroup {
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyGroup { inner: group_from_json(&doc_value(spec)?).or_raise()? })
    }

    #[staticmethod]
    fn kinds() -> Vec<(&'static str, &'static str)> {
        KINDS.to_vec()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn weights(&self, py: Python<'_>) -> PyResult<Vec<PyObject>> {
        self.inner.weights().iter().map(|w| fraction(py, w)).collect()
    }

    fn spec(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.to_json())
    }

    fn identity(&self, py: Python<'_>) -> PyResult<Option<PyObject>> {
        self.inner.identity().map(|e| self.out(py, &e)).transpose()
    }

    fn compose(&self, py: Python<'_>, a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        let c = self.inner.compose(&self.elem(a)?, &self.elem(b)?).or_raise()?;
        self.out(py, &c)
    }

    fn power(&self, py: Python<'_>, a: &Bound<'_, PyAny>, k: i64) -> PyResult<PyObject> {
        let c = self.inner.power(&self.elem(a)?, k).or_raise()?;
        self.out(py, &c)
    }

    fn distance(&self, py: Python<'_>, a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        scalar(py, &self.inner.distance(&self.elem(a)?, &self.elem(b)?).or_raise()?)
    }

    fn norm(&self, py: Python<'_>, a: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        scalar(py, &self.inner.norm(&self.elem(a)?).or_raise()?)
    }

    #[pyo3(signature = (count, seed = 0))]
    fn sample(&self, py: Python<'_>, count: usize, seed: u64) -> PyResult<Vec<PyObject>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.out(py, &self.inner.sample(&mut rng))).collect()
    }

    #[pyo3(signature = (samples = 1000, seed = 0))]
    fn audit(&self, py: Python<'_>, samples: usize, seed: u64) -> PyResult<PyObject> {
        let g = &self.inner;
        let r = py.allow_threads(|| audit_axioms(g, samples, seed));
        to_py(py, &r)
    }

    /// Checks `d(z, z^{n+1}) = n d(z, z^2)` for `n` in `j`; elements are
    /// sampled when none are given.
    #[pyo3(signature = (j, elements = None, samples = 200, seed = 0))]
    fn normedness(
        &self,
        py: Python<'_>,
        j: Vec<u64>,
        elements: Option<&Bound<'_, PyAny>>,
        samples: usize,
        seed: u64,
    ) -> PyResult<PyObject> {
        let elems = match elements {
            Some(list) => self.elems(list)?,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples).map(|_| self.inner.sample(&mut rng)).collect()
            }
        };
        let g = &self.inner;
        let v = py.allow_threads(|| check_j_normed(g, &j, &elems)).or_raise()?;
        to_py(py, &v)
    }

    fn trace(&self, py: Python<'_>, element: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        let e = self.elem(element)?;
        let env = Envelope::new(self.inner.clone()).or_raise()?;
        to_py(py, &env.trace(&e).or_raise()?)
    }

    /// `law` is a list of `{"element": .., "p": ..}`.
    fn expectation(&self, py: Python<'_>, law: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        let dist = FiniteDistribution::from_json(&self.inner, &to_value(law)?).or_raise()?;
        let env = Envelope::new(self.inner.clone()).or_raise()?;
        to_py(py, &env.expectation(&dist).or_raise()?)
    }

    fn sharpness(&self, py: Python<'_>, x: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>) -> PyResult<PyObject> {
        let r = sharpness_ratio(&self.inner, &self.elem(x)?, &rational(q)?).or_raise()?;
        to_py(py, &serde_json::json!({
            "q": format_rational(&r.q), "ratio": r.ratio, "ratio_pow_q": r.ratio_pow_q,
            "expected": r.expected, "exact_match": r.exact_match,
        }))
    }

    fn __repr__(&self) -> String {
        format!("Group({})", self.inner.to_json())
    }
}

/// A Rademacher sum `Σ ε_i x_i` with moment exponents `p` and `q`.
#[pyclass(name = "Scenario", module = "groupprob", frozen)]
struct PyScenario {
    inner: RademacherScenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (group, elements, p = None, q = None))]
    fn new(
        group: &PyGroup,
        elements: &Bound<'_, PyAny>,
        p: Option<&Bound<'_, PyAny>>,
        q: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let one = || BigRational::from_integer(1.into());
        let p = p.map(rational).transpose()?.unwrap_or_else(one);
        let q = q.map(rational).transpose()?.unwrap_or_else(one);
        let inner = RademacherScenario::new(group.inner.clone(), group.elems(elements)?, p, q).or_raise()?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_json(doc: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyScenario { inner: RademacherScenario::from_json(&doc_value(doc)?).or_raise()? })
    }

    fn to_json(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.to_json())
    }

    #[getter]
    fn group(&self) -> PyGroup {
        PyGroup { inner: self.inner.instance.clone() }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Exact law of `d(1, S^m)` as `[(distance, probability), ...]`.
    #[pyo3(signature = (m = 1))]
    fn law(&self, py: Python<'_>, m: u64) -> PyResult<Vec<(PyObject, PyObject)>> {
        let s = &self.inner;
        let law = py.allow_threads(|| enumerate_rademacher(s, m)).or_raise()?;
        law.atoms().iter().map(|(d, w)| Ok((scalar(py, d)?, fraction(py, w)?))).collect()
    }

    /// `(E[Z^p], E[Z^p]^{1/p})` for `Z = d(1, S)`.
    fn moment(&self, py: Python<'_>, p: &Bound<'_, PyAny>) -> PyResult<(PyObject, PyObject)> {
        let p = rational(p)?;
        let s = &self.inner;
        let law = py.allow_threads(|| enumerate_rademacher(s, 1)).or_raise()?;
        let m = moment(&law, &p).or_raise()?;
        Ok((scalar(py, &m.raw)?, scalar(py, &m.root)?))
    }

    #[pyo3(signature = (regime = "normed-general"))]
    fn check_kk(&self, py: Python<'_>, regime: &str) -> PyResult<PyObject> {
        let regime: Regime = regime.parse().or_raise()?;
        let s = &self.inner;
        let r = py.allow_threads(|| kk(s, regime)).or_raise()?;
        to_py(py, &r)
    }

    /// `family` is a name (prefixes, suffixes, singletons) or a list of
    /// 1-based index sets; prefixes by default.
    #[pyo3(signature = (s, t, family = None))]
    fn check_levy(
        &self,
        py: Python<'_>,
        s: &Bound<'_, PyAny>,
        t: &Bound<'_, PyAny>,
        family: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<PyObject> {
        let fam = match family {
            None => LaminarFamily::prefixes(self.inner.n()),
            Some(f) => match f.downcast::<PyString>() {
                Ok(name) => named_family(name.to_str()?, self.inner.n()).or_raise()?,
                Err(_) => LaminarFamily::from_json(&to_value(f)?).or_raise()?,
            },
        };
        let (s, t) = (exact(s)?, exact(t)?);
        let sc = &self.inner;
        let r = py.allow_threads(|| levy(sc, &fam, &s, &t)).or_raise()?;
        to_py(py, &r)
    }

    fn check_tail(
        &self,
        py: Python<'_>,
        s: &Bound<'_, PyAny>,
        t: &Bound<'_, PyAny>,
        u: &Bound<'_, PyAny>,
        v: &Bound<'_, PyAny>,
    ) -> PyResult<PyObject> {
        let (s, t, u, v) = (exact(s)?, exact(t)?, exact(u)?, exact(v)?);
        let sc = &self.inner;
        let r = py.allow_threads(|| check_tail_product(sc, &s, &t, &u, &v)).or_raise()?;
        to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n={}, p={}, q={}, group={})",
            self.inner.n(),
            format_rational(&self.inner.p),
            format_rational(&self.inner.q),
            self.inner.instance.to_json()
        )
    }
}

/// Exact `(value, formula)` of the Khinchin–Kahane constant; the value is a
/// float when irrational.
#[pyfunction]
#[pyo3(signature = (p, q, regime = "normed-general"))]
fn kk_constant(py: Python<'_>, p: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>, regime: &str) -> PyResult<(PyObject, String)> {
    let c = kk_const(&rational(p)?, &rational(q)?, regime.parse().or_raise()?).or_raise()?;
    Ok((scalar(py, &c.value)?, c.formula))
}

/// Maximal inequality for a random walk with i.i.d. steps drawn from `law`,
/// one report per threshold.
#[pyfunction]
#[pyo3(signature = (group, law, n, t_grid, z0 = None, z1 = None, mode = "exact", seed = 0, samples = 100_000))]
#[allow(clippy::too_many_arguments)]
fn check_mont(
    py: Python<'_>,
    group: &PyGroup,
    law: &Bound<'_, PyAny>,
    n: u32,
    t_grid: &Bound<'_, PyList>,
    z0: Option<&Bound<'_, PyAny>>,
    z1: Option<&Bound<'_, PyAny>>,
    mode: &str,
    seed: u64,
    samples: u64,
) -> PyResult<PyObject> {
    let g = &group.inner;
    let dist = FiniteDistribution::from_json(g, &to_value(law)?).or_raise()?;
    let z0 = match z0 {
        Some(z) => group.elem(z)?,
        None => g.identity().ok_or_else(|| err(Error::InvalidParameter("no identity; pass z0".into())))?,
    };
    let z1 = z1.map(|z| group.elem(z)).transpose()?.unwrap_or_else(|| z0.clone());
    let grid = t_grid.iter().map(|t| exact(&t)).collect::<PyResult<Vec<_>>>()?;
    let mode = match mode {
        "exact" => MontMode::Exact,
        "sample" => MontMode::Sample { seed, samples },
        other => return Err(err(Error::InvalidParameter(format!("unknown mode `{other}`")))),
    };
    let reports = py.allow_threads(|| mont(g, &dist, &z0, &z1, n, &grid, mode)).or_raise()?;
    to_py(py, &reports)
}

/// Free reduction of a word such as `"[a,b]^3"` or `"a b^-1 a"`.
#[pyfunction]
fn reduce_word(word: &str) -> PyResult<String> {
    Ok(parse_word(word).or_raise()?.to_string())
}

/// Lower and upper bounds on the bi-invariant (conjugation-invariant) word norm.
#[pyfunction]
#[pyo3(signature = (word, conj_bound = 4, len_bound = 6, node_budget = 200_000_000))]
fn word_norm(py: Python<'_>, word: &str, conj_bound: usize, len_bound: usize, node_budget: u64) -> PyResult<PyObject> {
    let w = parse_word(word).or_raise()?;
    let limits = SearchLimits { conj_bound, len_bound, node_budget };
    let bounds = py.allow_threads(|| biinv_norm(&w, &limits));
    to_py(py, &bounds)
}

/// Runs a manifest file; returns `{"exit_code", "ledger", "records"}`.
#[pyfunction]
fn run_batch(py: Python<'_>, manifest: &str) -> PyResult<PyObject> {
    let path = Path::new(manifest);
    let m = BatchManifest::load(path).or_raise()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let outcome = py.allow_threads(|| run_batch_core(&m, base)).or_raise()?;
    to_py(py, &serde_json::json!({
        "exit_code": outcome.exit_code,
        "ledger": outcome.ledger_path,
        "records": outcome.records,
    }))
}

#[pyfunction]
#[pyo3(signature = (ledger, format = "json"))]
fn summary(ledger: &str, format: &str) -> PyResult<String> {
    let text = std::fs::read_to_string(ledger).map_err(|e| err(e.into()))?;
    let records = read_ledger(&text).or_raise()?;
    emit_summary(&records, format.parse().or_raise()?).or_raise()
}

#[pymodule]
#[pyo3(name = "groupprob")]
pub fn groupprob_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GroupProbError", m.py().get_type::<GroupProbError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(kk_constant, m)?)?;
    m.add_function(wrap_pyfunction!(check_mont, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_word, m)?)?;
    m.add_function(wrap_pyfunction!(word_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(summary, m)?)?;
    Ok(())
}
