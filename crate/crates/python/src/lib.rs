use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use orbifold_arith::brauer::{self, ObstructionConfig, ProfileMode, ProfileOptions};
use orbifold_arith::localfields::{self, Place};
use orbifold_arith::model_io::{model_to_json, parse_model, ModelFile};
use orbifold_arith::orbifold::{self, PointFlag, Weight};
use orbifold_arith::{census, registry, Error};

fn err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn place(v: &Bound<'_, PyAny>) -> PyResult<Place> {
    v.str()?.to_string().parse().map_err(err)
}

fn model(text: &str, weight: Option<u64>) -> PyResult<ModelFile> {
    let mut file = parse_model(text).map_err(err)?;
    if let Some(m) = weight {
        file.model = file.model.with_weight(Weight::new(m).map_err(err)?);
    }
    Ok(file)
}

fn point(coords: Vec<BigInt>) -> PyResult<orbifold::ProjPointQ> {
    orbifold::normalize_point(&coords).map_err(err)
}

fn mode(name: &str, weight: Option<u64>) -> PyResult<ProfileMode> {
    ProfileMode::new(name, weight).map_err(err)
}

/// Hilbert symbol (a, b) at a place; a and b are integers or strings like "3/4".
#[pyfunction]
fn hilbert_symbol(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>, at: &Bound<'_, PyAny>) -> PyResult<i8> {
    let q = |x: &Bound<'_, PyAny>| -> PyResult<num_rational::BigRational> {
        let s = x.str()?.to_string();
        s.parse().map_err(|_| PyValueError::new_err(format!("bad rational {s:?}")))
    };
    localfields::hilbert_symbol(&q(a)?, &q(b)?, place(at)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (model_json, coords, prime=None, weight=None))]
fn classify(py: Python<'_>, model_json: &str, coords: Vec<BigInt>, prime: Option<u64>, weight: Option<u64>) -> PyResult<Py<PyAny>> {
    let file = model(model_json, weight)?;
    let pt = point(coords)?;
    match prime {
        Some(p) => to_py(py, &orbifold::classify_local(&pt, &file.model, p).map_err(err)?),
        None => to_py(py, &orbifold::classify_global(&pt, &file.model).map_err(err)?),
    }
}

#[pyfunction]
#[pyo3(signature = (model_json, height, flag="any", weight=None))]
fn search(py: Python<'_>, model_json: &str, height: u64, flag: &str, weight: Option<u64>) -> PyResult<Py<PyAny>> {
    let file = model(model_json, weight)?;
    let flag: PointFlag = serde_json::from_value(serde_json::json!(flag)).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let pts = py.detach(|| orbifold::search_points(&file.model, height, flag, &[])).map_err(err)?;
    to_py(py, &pts)
}

#[pyfunction]
#[pyo3(signature = (model_json, prime, depth=12, off_divisor=false))]
fn solve_local(py: Python<'_>, model_json: &str, prime: u64, depth: u32, off_divisor: bool) -> PyResult<Py<PyAny>> {
    let file = model(model_json, None)?;
    let f = file.model.equations().first().ok_or_else(|| PyValueError::new_err("model has no equation"))?;
    let units: Vec<_> = if off_divisor {
        file.model.divisor().iter().filter(|c| c.weight.in_support()).map(|c| c.form.clone()).collect()
    } else {
        vec![]
    };
    to_py(py, &localfields::zp_points_with_units(f, &units, prime, depth).map_err(err)?)
}

fn class_of(file: &ModelFile) -> PyResult<&brauer::QuaternionClass> {
    file.class.as_ref().ok_or_else(|| PyValueError::new_err("model has no class"))
}

#[pyfunction]
fn invariant_at_point(model_json: &str, coords: Vec<BigInt>, at: &Bound<'_, PyAny>) -> PyResult<String> {
    let file = model(model_json, None)?;
    let v = brauer::invariant_at_point(class_of(&file)?, &point(coords)?, place(at)?).map_err(err)?;
    Ok(v.to_string())
}

#[pyfunction]
#[pyo3(signature = (model_json, at, mode="integral", weight=None, depth=None))]
fn invariant_profile(
    py: Python<'_>,
    model_json: &str,
    at: &Bound<'_, PyAny>,
    mode: &str,
    weight: Option<u64>,
    depth: Option<u32>,
) -> PyResult<Py<PyAny>> {
    let file = model(model_json, None)?;
    let (v, m) = (place(at)?, self::mode(mode, weight)?);
    let opts = ProfileOptions { max_depth: depth, ..ProfileOptions::default() };
    let class = class_of(&file)?;
    let profile = py.detach(|| brauer::invariant_profile(class, &file.model, v, m, &opts)).map_err(err)?;
    to_py(py, &profile)
}

#[pyfunction]
#[pyo3(signature = (model_json, mode="integral", weight=None))]
fn obstruction(py: Python<'_>, model_json: &str, mode: &str, weight: Option<u64>) -> PyResult<Py<PyAny>> {
    let file = model(model_json, None)?;
    let m = self::mode(mode, weight)?;
    let class = class_of(&file)?;
    let report = py.detach(|| brauer::adelic_obstruction(class, &file.model, m, &ObstructionConfig::default())).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn member_valid(a: i64, b: i64, c: i64, d: i64) -> bool {
    census::member_valid(a, b, c, d)
}

#[pyfunction]
fn census_count(py: Python<'_>, bound: u64) -> PyResult<u64> {
    py.detach(|| census::count_members(bound, None)).map_err(err)
}

#[pyfunction]
fn growth_table(py: Python<'_>, bounds: Vec<u64>) -> PyResult<Py<PyAny>> {
    let table = py.detach(|| census::growth_table(&bounds)).map_err(err)?;
    to_py(py, &table)
}

#[pyfunction]
#[pyo3(signature = (a, b, c, d, weights=vec![2, 3, 4, 5], height=200))]
fn verify_member(py: Python<'_>, a: i64, b: i64, c: i64, d: i64, weights: Vec<u64>, height: u64) -> PyResult<Py<PyAny>> {
    let m = census::FamilyMember::new(a, b, c, d).map_err(err)?;
    let verdict = py.detach(|| census::verify_member(&m, &weights, Some(height))).map_err(err)?;
    to_py(py, &verdict)
}

/// JSON text of a built-in example model, usable wherever a model is expected.
#[pyfunction]
fn example_model(id: &str) -> PyResult<String> {
    let c = registry::case(id).map_err(err)?;
    Ok(model_to_json(&c.model, c.class.as_ref()).to_string())
}

#[pyfunction]
#[pyo3(signature = (id="all"))]
fn paper_verify(py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
    let reports = py.detach(|| registry::verify(id)).map_err(err)?;
    to_py(py, &reports)
}

#[pymodule]
fn pyorbifold(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hilbert_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(solve_local, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_at_point, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_profile, m)?)?;
    m.add_function(wrap_pyfunction!(obstruction, m)?)?;
    m.add_function(wrap_pyfunction!(member_valid, m)?)?;
    m.add_function(wrap_pyfunction!(census_count, m)?)?;
    m.add_function(wrap_pyfunction!(growth_table, m)?)?;
    m.add_function(wrap_pyfunction!(verify_member, m)?)?;
    m.add_function(wrap_pyfunction!(example_model, m)?)?;
    m.add_function(wrap_pyfunction!(paper_verify, m)?)?;
    m.add("SCHEMA_VERSION", orbifold_arith::model_io::SCHEMA_VERSION)?;
    Ok(())
}
