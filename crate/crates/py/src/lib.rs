//! Python bindings: coefficient rings, truncated Laurent series, loop-group
//! matrices and the main operations (Smith form, bounds, Newton slopes,
//! decency, Lang trivialization, Tate modules, ADLV counts, the metric and
//! the torus norm identities).
//!
//! Build with `cargo build -p shtuka-py --release`, rename the produced
//! `libshtuka_py.so` to `shtuka_py.so` somewhere on `PYTHONPATH`, and
//! `import shtuka_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyInt, PyList};
use serde_json::{json, Value};
use shtuka_core::adlv;
use shtuka_core::json as sj;
use shtuka_core::newton;
use shtuka_core::semilinear::{self, BoundRelation, BoundSpec, Coweight};
use shtuka_core::shtuka as sht;
use shtuka_core::torus;
use shtuka_core::{CoeffRing, FieldSpec, LoopElement, Series as CoreSeries};

fn err<T>(e: shtuka_core::Error) -> PyResult<T> {
    Err(PyValueError::new_err(format!("[{}] {e}", e.code())))
}

fn ok_or<T>(r: shtuka_core::Result<T>) -> PyResult<T> {
    r.or_else(err)
}

/// Converts a Python int / (nested) list structure to JSON for the
/// coefficient parsers.
fn py_to_json(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if let Ok(i) = obj.cast::<PyInt>() {
        let v: i64 = i.extract()?;
        return Ok(json!(v));
    }
    if let Ok(list) = obj.cast::<PyList>() {
        let items: PyResult<Vec<Value>> = list.iter().map(|x| py_to_json(&x)).collect();
        return Ok(Value::Array(items?));
    }
    Err(PyValueError::new_err("expected an int or a (nested) list of ints"))
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Ring {
    inner: CoeffRing,
}

#[pymethods]
impl Ring {
    /// Finite field F_{q^ext} with Frobenius x -> x^q.
    #[new]
    #[pyo3(signature = (q, ext = 1))]
    fn new(q: u64, ext: usize) -> PyResult<Self> {
        Ok(Ring { inner: ok_or(CoeffRing::from_q_ext(q, ext))? })
    }

    /// Nilpotent extension F_{q^ext}[gen]/(gen^order).
    #[staticmethod]
    #[pyo3(signature = (q, order, ext = 1, generator = "xi"))]
    fn nilpotent(q: u64, order: usize, ext: usize, generator: &str) -> PyResult<Self> {
        let base = ok_or(CoeffRing::from_q_ext(q, ext))?;
        let inner = ok_or(CoeffRing::nilpotent_extension(
            base.field().clone(),
            q,
            generator,
            order,
        ))?;
        Ok(Ring { inner })
    }

    /// Dual numbers F_{q^ext}[eps]/(eps^2).
    #[staticmethod]
    #[pyo3(signature = (q, ext = 1))]
    fn dual(q: u64, ext: usize) -> PyResult<Self> {
        let base = ok_or(CoeffRing::from_q_ext(q, ext))?;
        let inner = ok_or(CoeffRing::dual_numbers(base.field().clone(), q))?;
        Ok(Ring { inner })
    }

    #[getter]
    fn q(&self) -> u64 {
        self.inner.base_q()
    }

    #[getter]
    fn modulus(&self) -> Vec<u64> {
        self.inner.field().modulus().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Ring(p={}, degree={}, q={}, kind={:?})",
            self.inner.field().p(),
            self.inner.field().degree(),
            self.inner.base_q(),
            self.inner.kind()
        )
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Series {
    inner: CoreSeries,
}

#[pymethods]
impl Series {
    /// Series sum_{e >= val} coeffs[e - val] z^e known below `prec`.
    /// Coefficients are ints (prime subfield), digit lists in the power
    /// basis, or outer lists indexed by generator power.
    #[new]
    #[pyo3(signature = (ring, val, coeffs, prec = None))]
    fn new(
        ring: &Ring,
        val: i64,
        coeffs: &Bound<'_, PyAny>,
        prec: Option<i64>,
    ) -> PyResult<Self> {
        let coeffs = py_to_json(coeffs)?;
        let mut obj = json!({"val": val, "coeffs": coeffs});
        if let Some(p) = prec {
            obj["prec"] = json!(p);
        }
        Ok(Series { inner: ok_or(sj::series_from_json(&ring.inner, &obj))? })
    }

    #[staticmethod]
    fn zero(ring: &Ring, prec: i64) -> Series {
        Series { inner: CoreSeries::zero(ring.inner.clone(), prec) }
    }

    #[staticmethod]
    fn one(ring: &Ring, prec: i64) -> Series {
        Series { inner: CoreSeries::one(ring.inner.clone(), prec) }
    }

    /// The variable to a power: z^n.
    #[staticmethod]
    fn z_pow(ring: &Ring, n: i64, prec: i64) -> Series {
        Series { inner: CoreSeries::monomial(ring.inner.clone(), ring.inner.one(), n, prec) }
    }

    fn add(&self, other: &Series) -> PyResult<Series> {
        Ok(Series { inner: ok_or(self.inner.add(&other.inner))? })
    }

    fn sub(&self, other: &Series) -> PyResult<Series> {
        Ok(Series { inner: ok_or(self.inner.sub(&other.inner))? })
    }

    fn mul(&self, other: &Series) -> PyResult<Series> {
        Ok(Series { inner: ok_or(self.inner.mul(&other.inner))? })
    }

    fn invert(&self) -> PyResult<Series> {
        Ok(Series { inner: ok_or(self.inner.invert())? })
    }

    fn frobenius(&self) -> Series {
        Series { inner: self.inner.frobenius() }
    }

    /// The valuation, or None when the series vanishes to precision.
    fn valuation(&self) -> Option<i64> {
        match self.inner.valuation() {
            shtuka_core::Valuation::At(v) => Some(v),
            shtuka_core::Valuation::ZeroToPrecision { .. } => None,
        }
    }

    #[getter]
    fn prec(&self) -> i64 {
        self.inner.prec()
    }

    fn coeff(&self, e: i64) -> Option<Vec<u64>> {
        self.inner.coeff(e)
    }

    fn to_json(&self) -> String {
        sj::series_to_json(&self.inner).to_string()
    }

    fn __eq__(&self, other: &Series) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("{}", self.inner)
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Matrix {
    inner: LoopElement,
}

impl Matrix {
    fn wrap(m: LoopElement) -> Matrix {
        Matrix { inner: m }
    }
}

#[pymethods]
impl Matrix {
    /// Square matrix from rows of Series; certified Laurent-invertible.
    #[new]
    fn new(rows: Vec<Vec<Series>>) -> PyResult<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let entries: Vec<CoreSeries> =
            rows.into_iter().flatten().map(|s| s.inner).collect();
        Ok(Matrix { inner: ok_or(LoopElement::new(r, entries))? })
    }

    #[staticmethod]
    fn identity(ring: &Ring, rank: usize, prec: i64) -> Matrix {
        Matrix::wrap(LoopElement::identity(ring.inner.clone(), rank, prec))
    }

    /// diag(z^mu1, ..., z^mur).
    #[staticmethod]
    fn diag_z(ring: &Ring, mu: Vec<i64>, prec: i64) -> Matrix {
        Matrix::wrap(LoopElement::diag_z_powers(ring.inner.clone(), &mu, prec))
    }

    #[staticmethod]
    fn from_json(ring: &Ring, text: &str) -> PyResult<Matrix> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Matrix::wrap(ok_or(sj::matrix_from_json(&ring.inner, &v, None))?))
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn prec(&self) -> i64 {
        self.inner.prec()
    }

    fn entry(&self, i: usize, j: usize) -> Series {
        Series { inner: self.inner.entry(i, j).clone() }
    }

    fn mul(&self, other: &Matrix) -> PyResult<Matrix> {
        Ok(Matrix::wrap(ok_or(self.inner.mul(&other.inner))?))
    }

    fn inverse(&self) -> PyResult<Matrix> {
        Ok(Matrix::wrap(ok_or(self.inner.inverse())?))
    }

    fn frobenius(&self) -> Matrix {
        Matrix::wrap(self.inner.frobenius())
    }

    fn det(&self) -> PyResult<Series> {
        Ok(Series { inner: ok_or(self.inner.det())? })
    }

    fn exterior_power(&self, j: usize) -> PyResult<Matrix> {
        Ok(Matrix::wrap(ok_or(self.inner.exterior_power(j))?))
    }

    fn is_integral(&self) -> PyResult<bool> {
        ok_or(self.inner.is_integral())
    }

    /// Smith form (U, mu, V) with g = U diag(z^mu) V.
    fn smith(&self) -> PyResult<(Matrix, Vec<i64>, Matrix)> {
        let (u, mu, v) = ok_or(semilinear::smith_form(&self.inner))?;
        Ok((Matrix::wrap(u), mu.parts().to_vec(), Matrix::wrap(v)))
    }

    /// The Hodge polygon.
    fn relative_position(&self) -> PyResult<Vec<i64>> {
        Ok(ok_or(semilinear::relative_position(&self.inner))?.parts().to_vec())
    }

    /// Exterior-power boundedness test against a dominant coweight.
    #[pyo3(signature = (mu, relation = "leq"))]
    fn bounded_by(&self, mu: Vec<i64>, relation: &str) -> PyResult<bool> {
        let relation = match relation {
            "leq" => BoundRelation::DominanceLeq,
            "eq" => BoundRelation::Equal,
            other => return Err(PyValueError::new_err(format!("unknown relation {other:?}"))),
        };
        let bound = BoundSpec { coweight: ok_or(Coweight::new(mu))?, relation, twist: None };
        ok_or(semilinear::bounded_by(&self.inner, &bound))
    }

    /// Newton slopes as (numerator, denominator) pairs.
    #[pyo3(signature = (budget = 16))]
    fn newton_slopes(&self, budget: usize) -> PyResult<Vec<(i64, i64)>> {
        Ok(ok_or(newton::newton_slopes(&self.inner, budget))?.slopes().to_vec())
    }

    fn check_decency(&self, s: usize) -> PyResult<bool> {
        ok_or(newton::check_decency(&self.inner, s))
    }

    fn kottwitz(&self) -> PyResult<i64> {
        ok_or(newton::kottwitz_gl(&self.inner))
    }

    fn in_jb(&self, b: &Matrix) -> PyResult<bool> {
        ok_or(newton::in_jb(&self.inner, &b.inner))
    }

    fn to_json(&self) -> String {
        sj::matrix_to_json(&self.inner).to_string()
    }

    /// Coefficientwise equality up to the common certified horizon.
    fn eq_to_common_prec(&self, other: &Matrix) -> bool {
        self.inner.eq_to_common_prec(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("Matrix(rank={}, prec={})", self.inner.rank(), self.inner.prec())
    }
}

#[pyclass(frozen)]
struct Shtuka {
    inner: sht::LocalShtuka,
}

#[pymethods]
impl Shtuka {
    #[new]
    fn new(b: &Matrix) -> PyResult<Self> {
        Ok(Shtuka { inner: ok_or(sht::LocalShtuka::new(b.inner.clone()))? })
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn frobenius_matrix(&self) -> Matrix {
        Matrix::wrap(self.inner.frobenius_matrix().clone())
    }

    fn is_etale(&self) -> PyResult<bool> {
        ok_or(self.inner.is_etale())
    }

    fn transport(&self, f: &Matrix) -> PyResult<Shtuka> {
        Ok(Shtuka { inner: ok_or(self.inner.transport(&f.inner))? })
    }

    /// (extension degree, c) with c = b sigma(c) to precision.
    #[pyo3(signature = (max_degree = 24))]
    fn lang_trivialize(&self, max_degree: usize) -> PyResult<(usize, Matrix)> {
        let (d, c) = ok_or(sht::lang_trivialize(&self.inner, max_degree))?;
        Ok((d, Matrix::wrap(c)))
    }

    /// (extension degree, basis, galois).
    #[pyo3(signature = (max_degree = 24))]
    fn tate_module(&self, max_degree: usize) -> PyResult<(usize, Matrix, Matrix)> {
        let t = ok_or(sht::tate_module(&self.inner, max_degree))?;
        Ok((t.ext_degree, Matrix::wrap(t.basis), Matrix::wrap(t.galois)))
    }
}

#[pyfunction]
fn is_quasi_isogeny(f: &Matrix, source: &Shtuka, target: &Shtuka) -> PyResult<bool> {
    ok_or(sht::is_quasi_isogeny(&f.inner, &source.inner, &target.inner))
}

/// Least n with x^{-1} y bounded by n (r-1, r-3, ..., 1-r); None when the
/// points are incommensurable (infinite distance).
#[pyfunction]
fn metric_dtilde(x: &Matrix, y: &Matrix) -> PyResult<Option<i64>> {
    match adlv::metric_dtilde(&x.inner, &y.inner) {
        Ok(d) => Ok(Some(d)),
        Err(shtuka_core::Error::Incommensurable(_)) => Ok(None),
        Err(e) => err(e),
    }
}

/// Number of lattices in the window of the affine Deligne-Lusztig set of
/// `b` for the bound (mu, relation), over the degree-`ext` extension.
#[pyfunction]
#[pyo3(signature = (b, mu, relation = "leq", ext = 1, window = 2, cap = 1 << 22))]
fn adlv_count(
    b: &Matrix,
    mu: Vec<i64>,
    relation: &str,
    ext: usize,
    window: i64,
    cap: u128,
) -> PyResult<usize> {
    let relation = match relation {
        "leq" => BoundRelation::DominanceLeq,
        "eq" => BoundRelation::Equal,
        other => return Err(PyValueError::new_err(format!("unknown relation {other:?}"))),
    };
    let bound = BoundSpec { coweight: ok_or(Coweight::new(mu))?, relation, twist: None };
    Ok(ok_or(adlv::adlv_points(&b.inner, &bound, ext, window, cap))?.points.len())
}

#[pyfunction]
fn enumerate_lattice_count(ring: &Ring, rank: usize, window: i64) -> PyResult<usize> {
    Ok(ok_or(adlv::enumerate_lattices(&ring.inner, rank, window, 1 << 22))?.len())
}

/// Runs the torus norm identities; returns (alpha_json, beta_json) of the
/// lifted norm on success and raises on any identity failure.
#[pyfunction]
fn torus_norm(p: u64, d: usize, xi_order: usize, prec: i64) -> PyResult<(String, String)> {
    let field = ok_or(FieldSpec::new(p, d))?;
    let g = ok_or(torus::norm_mu_element(&field, xi_order, prec))?;
    let ratio = ok_or(torus::embedding_ratio(&field, xi_order, prec))?;
    let sq = ok_or(torus::torus_mul(&g, &g))?;
    if !ratio.eq_to_common_prec(&sq) {
        return Err(PyValueError::new_err("embedding ratio differs from g^2"));
    }
    Ok((
        sj::series_to_json(&g.a).to_string(),
        sj::series_to_json(&g.b).to_string(),
    ))
}

#[pymodule]
fn shtuka_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Ring>()?;
    m.add_class::<Series>()?;
    m.add_class::<Matrix>()?;
    m.add_class::<Shtuka>()?;
    m.add_function(wrap_pyfunction!(is_quasi_isogeny, m)?)?;
    m.add_function(wrap_pyfunction!(metric_dtilde, m)?)?;
    m.add_function(wrap_pyfunction!(adlv_count, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_lattice_count, m)?)?;
    m.add_function(wrap_pyfunction!(torus_norm, m)?)?;
    Ok(())
}
